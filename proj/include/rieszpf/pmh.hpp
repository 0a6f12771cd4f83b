#pragma once

// Pseudo-marginal Metropolis-Hastings over model parameters, driven by the
// Riesz particle filter's likelihood estimate, plus chain diagnostics.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rieszpf/error.hpp"
#include "rieszpf/numeric.hpp"
#include "rieszpf/smc.hpp"
#include "rieszpf/ssm.hpp"

namespace rieszpf {

struct ChainState {
  std::vector<double> theta;
  double log_lik_hat = 0.0;
  double log_prior = 0.0;
};

struct PmhConfig {
  std::size_t iterations = 5000;
  std::size_t burn_in = 1250;
  std::vector<double> step_sizes{0.1};
  std::size_t n_particles = 100;
  std::size_t n_riesz = 100;
  std::uint64_t seed = 0;

  void validate(std::size_t dim) const {
    require(iterations >= 1, ErrorCode::invalid_parameter, "iterations must be >= 1");
    require(burn_in < iterations, ErrorCode::burn_in_too_large, "burn_in must be < iterations");
    require(step_sizes.size() == dim, ErrorCode::dimension_mismatch,
            "step_sizes needs " + std::to_string(dim) + " entries");
    for (double h : step_sizes) require(h >= 0.0, ErrorCode::invalid_parameter, "step sizes must be >= 0");
    require(n_particles >= 1 && n_riesz >= 2, ErrorCode::invalid_parameter, "n_particles >= 1 and n_riesz >= 2");
  }

  static std::size_t default_burn_in(std::size_t iterations) { return iterations / 4; }
};

struct ChainOutput {
  std::vector<std::vector<double>> samples;
  std::vector<bool> accepted;
  std::vector<double> log_lik_trace;  ///< stored estimate after each iteration
  double acceptance_rate = 0.0;
};

// ------------------------------------------------------------------ priors

/// One prior factor per parameter coordinate.
struct PriorComponent {
  enum class Kind { normal, truncated_normal, gamma, uniform };
  Kind kind = Kind::normal;
  double a = 0.0;  ///< mean | mean | shape | lower
  double b = 1.0;  ///< std  | std  | rate  | upper
  double lower = -kInf;
  double upper = kInf;

  static PriorComponent normal(double mean, double sd) { return {Kind::normal, mean, sd}; }
  static PriorComponent truncated_normal(double mean, double sd, double lo, double hi) {
    return {Kind::truncated_normal, mean, sd, lo, hi};
  }
  static PriorComponent gamma(double shape, double rate) { return {Kind::gamma, shape, rate, 0.0, kInf}; }
  static PriorComponent uniform(double lo, double hi) { return {Kind::uniform, lo, hi, lo, hi}; }

  void validate() const {
    switch (kind) {
      case Kind::normal:
        require(b > 0.0, ErrorCode::invalid_parameter, "normal prior sd must be > 0");
        break;
      case Kind::truncated_normal:
        require(b > 0.0 && lower < upper, ErrorCode::invalid_parameter, "truncated normal needs sd > 0, lower < upper");
        break;
      case Kind::gamma:
        require(a > 0.0 && b > 0.0, ErrorCode::invalid_parameter, "gamma prior needs shape, rate > 0");
        break;
      case Kind::uniform:
        require(a < b, ErrorCode::invalid_parameter, "uniform prior needs lower < upper");
        break;
    }
  }

  double logpdf(double x) const {
    switch (kind) {
      case Kind::normal:
        return normal_logpdf(x, a, b * b);
      case Kind::truncated_normal: {
        if (!(x > lower && x < upper)) return -kInf;
        const double mass = normal_cdf((upper - a) / b) - normal_cdf((lower - a) / b);
        return normal_logpdf(x, a, b * b) - std::log(mass);
      }
      case Kind::gamma:
        if (!(x > 0.0)) return -kInf;
        return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
      case Kind::uniform:
        if (!(x >= a && x <= b)) return -kInf;
        return -std::log(b - a);
    }
    return -kInf;
  }
};

struct PriorSpec {
  std::vector<PriorComponent> components;

  double logpdf(const std::vector<double>& theta) const {
    require(theta.size() == components.size(), ErrorCode::dimension_mismatch, "prior and theta differ in size");
    double acc = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double lp = components[k].logpdf(theta[k]);
      if (lp == -kInf) return -kInf;
      acc += lp;
    }
    return acc;
  }
};

// ------------------------------------------------------------------ kernel

inline std::vector<double> propose_theta(const std::vector<double>& theta, const std::vector<double>& step_sizes,
                                         Rng& rng) {
  require(theta.size() == step_sizes.size(), ErrorCode::dimension_mismatch, "theta and step_sizes differ in size");
  std::vector<double> out(theta);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double z = standard_normal(rng);
    out[k] += step_sizes[k] * z;
  }
  return out;
}

/// ln of the estimated MH ratio; -inf when the proposal leaves the prior's
/// support. `log_q_reverse` / `log_q_forward` are ln q(theta | theta') and
/// ln q(theta' | theta), zero for a symmetric walk.
inline double acceptance_log_ratio(const ChainState& current, const ChainState& proposed, double log_q_reverse = 0.0,
                                   double log_q_forward = 0.0) {
  if (proposed.log_prior == -kInf) return -kInf;
  if (!std::isfinite(proposed.log_lik_hat)) return -kInf;
  return (proposed.log_lik_hat + proposed.log_prior) - (current.log_lik_hat + current.log_prior) + log_q_reverse -
         log_q_forward;
}

/// ln p_hat(y | theta); may consume randomness.
using LikelihoodEstimator = std::function<double(const std::vector<double>&, Rng&)>;

/// Optional asymmetric proposal: draw theta' and return ln q(theta | theta') - ln q(theta' | theta).
using ProposalKernel = std::function<double(const std::vector<double>&, std::vector<double>&, Rng&)>;

inline ChainOutput pmh_run(const LikelihoodEstimator& log_lik, const PriorSpec& prior, std::vector<double> theta0,
                           const PmhConfig& cfg, const ProposalKernel& kernel = {}) {
  cfg.validate(theta0.size());
  for (const auto& c : prior.components) c.validate();
  Rng rng(cfg.seed);

  ChainState current{std::move(theta0), 0.0, 0.0};
  current.log_prior = prior.logpdf(current.theta);
  require(current.log_prior > -kInf, ErrorCode::invalid_parameter, "initial theta lies outside the prior support");
  current.log_lik_hat = log_lik(current.theta, rng);
  require(std::isfinite(current.log_lik_hat), ErrorCode::all_weights_zero,
          "likelihood estimate at the initial theta is not finite");

  ChainOutput out;
  out.samples.reserve(cfg.iterations);
  out.accepted.reserve(cfg.iterations);
  out.log_lik_trace.reserve(cfg.iterations);
  std::size_t n_accepted = 0;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    ChainState proposed;
    double log_q_ratio = 0.0;
    if (kernel) {
      log_q_ratio = kernel(current.theta, proposed.theta, rng);
    } else {
      proposed.theta = propose_theta(current.theta, cfg.step_sizes, rng);
    }

    bool accept;
    if (proposed.theta == current.theta) {
      accept = true;
      proposed = current;
    } else {
      proposed.log_prior = prior.logpdf(proposed.theta);
      if (proposed.log_prior == -kInf) {
        accept = false;
      } else {
        try {
          proposed.log_lik_hat = log_lik(proposed.theta, rng);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::all_weights_zero) throw;
          proposed.log_lik_hat = -kInf;
        }
        const double lr = acceptance_log_ratio(current, proposed, log_q_ratio, 0.0);
        accept = lr >= 0.0 || std::log(uniform01(rng)) < lr;
      }
    }
    if (accept) {
      current = std::move(proposed);
      ++n_accepted;
    }
    out.samples.push_back(current.theta);
    out.accepted.push_back(accept);
    out.log_lik_trace.push_back(current.log_lik_hat);
  }
  out.acceptance_rate = static_cast<double>(n_accepted) / static_cast<double>(cfg.iterations);
  return out;
}

// ------------------------------------------------------------------ model families

struct FilterSettings {
  std::size_t n_particles = 100;
  ResamplingScheme resampling = ResamplingScheme::multinomial;
};

/// theta = (phi); sigma_v, sigma_o fixed; x_0 = 0 exactly.
inline LikelihoodEstimator lgss_phi_likelihood(std::vector<double> obs, LgssParams fixed,
                                               std::shared_ptr<const RieszProposalSet> proposal,
                                               FilterSettings settings = {}) {
  return [obs = std::move(obs), fixed, proposal = std::move(proposal), settings](const std::vector<double>& theta,
                                                                                  Rng& rng) {
    LgssModel model{fixed};
    model.params.phi = theta.at(0);
    FilterOptions opts;
    opts.n_particles = settings.n_particles;
    opts.resampling = settings.resampling;
    return run_filter(model, obs, *proposal, opts, rng).log_likelihood;
  };
}

/// Exact Kalman log-likelihood for theta = (phi).
inline LikelihoodEstimator lgss_phi_exact_likelihood(std::vector<double> obs, LgssParams fixed) {
  return [obs = std::move(obs), fixed](const std::vector<double>& theta, Rng&) {
    LgssParams p = fixed;
    p.phi = theta.at(0);
    return kalman_filter(p, obs, 0.0, 0.0).log_likelihood;
  };
}

/// theta = (mu, rho, sigma_v); tau and the observation convention fixed.
inline LikelihoodEstimator sv_likelihood(std::vector<double> obs, SvParams fixed,
                                         std::shared_ptr<const RieszProposalSet> proposal,
                                         FilterSettings settings = {}) {
  return [obs = std::move(obs), fixed, proposal = std::move(proposal), settings](const std::vector<double>& theta,
                                                                                  Rng& rng) {
    SvModel model{fixed};
    model.params.mu = theta.at(0);
    model.params.rho = theta.at(1);
    model.params.sigma_v = theta.at(2);
    FilterOptions opts;
    opts.n_particles = settings.n_particles;
    opts.resampling = settings.resampling;
    return run_filter(model, obs, *proposal, opts, rng).log_likelihood;
  };
}

// ------------------------------------------------------------------ diagnostics

/// Sample autocorrelation at lags 0..max_lag (demeaned, divided by the lag-0 sum).
inline std::vector<double> acf(const std::vector<double>& series, std::size_t max_lag) {
  require(series.size() > max_lag, ErrorCode::series_too_short, "series must be longer than max_lag");
  const std::size_t n = series.size();
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : series) c0 += (v - mean) * (v - mean);
  std::vector<double> out(max_lag + 1, 0.0);
  out[0] = 1.0;
  if (c0 == 0.0) return out;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) ck += (series[t] - mean) * (series[t + k] - mean);
    out[k] = ck / c0;
  }
  return out;
}

struct PosteriorSummary {
  std::vector<double> mean;
  std::vector<double> variance;  ///< population convention, divisor N
};

inline PosteriorSummary posterior_summary(const ChainOutput& chain, std::size_t burn_in) {
  require(burn_in < chain.samples.size(), ErrorCode::burn_in_too_large, "burn_in must be < chain length");
  const std::size_t dim = chain.samples.front().size();
  const double n = static_cast<double>(chain.samples.size() - burn_in);
  PosteriorSummary s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (std::size_t i = burn_in; i < chain.samples.size(); ++i)
    for (std::size_t k = 0; k < dim; ++k) s.mean[k] += chain.samples[i][k];
  for (auto& m : s.mean) m /= n;
  for (std::size_t i = burn_in; i < chain.samples.size(); ++i)
    for (std::size_t k = 0; k < dim; ++k) {
      const double e = chain.samples[i][k] - s.mean[k];
      s.variance[k] += e * e;
    }
  for (auto& v : s.variance) v /= n;
  return s;
}

/// Coordinate k of every sample.
inline std::vector<double> chain_coordinate(const ChainOutput& chain, std::size_t k) {
  std::vector<double> out;
  out.reserve(chain.samples.size());
  for (const auto& s : chain.samples) out.push_back(s.at(k));
  return out;
}

}  // namespace rieszpf
