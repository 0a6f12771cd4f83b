#pragma once

// Particle filter whose propagation step places particles on a weighted Riesz
// configuration instead of independent draws.
//
// The configuration is generated once for N(0, 1) and mapped affinely through
// each particle's Gaussian proposal N(m_i, v_i). Particle i uses configuration
// point riesz_index(i, N'). Under Perturbation::random_shift the point's
// probability-transform coordinate u_k = Phi(z_k) is rotated by a uniform shift
// shared within each block of N' consecutive particles,
//     z = Phi^{-1}(frac(u_k + U_block)),
// so every particle is marginally an exact draw from its proposal while the
// block keeps the configuration's stratification. The weight ratio
// g(y | x) f(x | x_prev) / q(x) then gives an unbiased likelihood estimate.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rieszpf/error.hpp"
#include "rieszpf/numeric.hpp"
#include "rieszpf/riesz_energy.hpp"
#include "rieszpf/riesz_sampler.hpp"
#include "rieszpf/ssm.hpp"

namespace rieszpf {

template <class M>
concept StateSpaceModel = requires(const M& m, double x, double x_prev, double y, Rng& rng) {
  { m.sample_initial(rng) } -> std::convertible_to<double>;
  { m.log_transition(x, x_prev) } -> std::convertible_to<double>;
  { m.log_observation(y, x) } -> std::convertible_to<double>;
  { m.proposal(x_prev, y) } -> std::convertible_to<GaussianProposal>;
};

/// LGSS with the optimal proposal; x_0 ~ N(x0_mean, x0_var).
struct LgssModel {
  LgssParams params;
  double x0_mean = 0.0;
  double x0_var = 0.0;

  double sample_initial(Rng& rng) const {
    return x0_var > 0.0 ? x0_mean + std::sqrt(x0_var) * standard_normal(rng) : x0_mean;
  }
  double log_transition(double x, double x_prev) const {
    return normal_logpdf(x, params.phi * x_prev, params.sigma_v * params.sigma_v);
  }
  double log_observation(double y, double x) const {
    return normal_logpdf(y, x, params.sigma_o * params.sigma_o);
  }
  GaussianProposal proposal(double x_prev, double y) const { return lgss_optimal_proposal(x_prev, y, params); }
};

/// SV model with a Laplace fit of the optimal proposal.
struct SvModel {
  SvParams params;

  double sample_initial(Rng& rng) const {
    return params.mu + std::sqrt(params.stationary_variance()) * standard_normal(rng);
  }
  double log_transition(double x, double x_prev) const { return sv_transition_logpdf(x, x_prev, params); }
  double log_observation(double y, double x) const { return sv_observation_logpdf(y, x, params); }
  GaussianProposal proposal(double x_prev, double y) const { return sv_gaussian_proposal(x_prev, y, params); }
};

struct ParticleSystem {
  std::vector<double> particles;
  std::vector<double> log_weights;
  std::vector<double> normalized_weights;
  std::vector<std::size_t> ancestors;
  std::size_t t = 0;

  std::size_t size() const { return particles.size(); }
};

struct FilterOutput {
  std::vector<double> filtered_means;  ///< (1/n) sum_i x_t^i over the resampled cloud
  std::vector<double> weighted_means;  ///< sum_i W_t^i x_t^i before resampling
  std::vector<double> ess_trace;
  std::vector<double> lower95;  ///< filled when FilterOptions::record_intervals
  std::vector<double> upper95;
  double log_likelihood = 0.0;
};

enum class Perturbation { random_shift, gaussian_jitter };
enum class ResamplingScheme { multinomial, systematic };

inline double effective_sample_size(std::span<const double> normalized) {
  double sq = 0.0;
  for (double w : normalized) sq += w * w;
  return 1.0 / sq;
}

namespace detail {

inline void check_normalized(std::span<const double> w) {
  require(!w.empty(), ErrorCode::unnormalized_weights, "weight vector is empty");
  double total = 0.0;
  for (double v : w) {
    require(v >= 0.0 && std::isfinite(v), ErrorCode::unnormalized_weights, "weights must be finite and >= 0");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::unnormalized_weights,
          "weights sum to " + std::to_string(total));
}

}  // namespace detail

/// n iid ancestor indices with P(index = j) = w_j.
inline std::vector<std::size_t> multinomial_resample(std::span<const double> weights, Rng& rng) {
  detail::check_normalized(weights);
  std::vector<double> cdf(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cdf.begin());
  const double total = cdf.back();
  std::vector<std::size_t> out(weights.size());
  for (auto& a : out) {
    const double u = uniform01(rng) * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    a = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), weights.size() - 1);
    // Never pick a zero-weight index through a flat cdf segment at the top.
    while (weights[a] == 0.0 && a > 0) --a;
  }
  return out;
}

inline std::vector<std::size_t> systematic_resample(std::span<const double> weights, Rng& rng) {
  detail::check_normalized(weights);
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n);
  const double u0 = uniform01(rng);
  double cum = weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) + u0) / static_cast<double>(n);
    while (u > cum && j + 1 < n) cum += weights[++j];
    out[i] = j;
  }
  return out;
}

inline std::size_t riesz_index(std::size_t i, std::size_t n_prime) {
  require(n_prime >= 1, ErrorCode::invalid_parameter, "N' must be >= 1");
  return i % n_prime;
}

/// Order in which proposal slots visit the configuration points.
///  * generation: the sampler's order.
///  * spread: points sorted by coordinate and visited in van der Corput rank
///    order, so the first m slots are spread over the whole range for any m.
enum class SlotOrder { generation, spread };

/// Permutation of 0..n-1 following the base-2 radical inverse of 0, 1, 2, ...
inline std::vector<std::size_t> van_der_corput_ranks(std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(n);
  std::vector<bool> used(n, false);
  for (std::uint64_t j = 0; out.size() < n; ++j) {
    double v = 0.0;
    double f = 0.5;
    for (std::uint64_t b = j; b > 0; b >>= 1, f *= 0.5)
      if (b & 1U) v += f;
    const auto r = std::min(n - 1, static_cast<std::size_t>(v * static_cast<double>(n)));
    if (!used[r]) {
      used[r] = true;
      out.push_back(r);
    }
  }
  return out;
}

/// A standardised Riesz configuration used as proposal locations.
class RieszProposalSet {
 public:
  explicit RieszProposalSet(PointConfiguration standardized, Perturbation mode = Perturbation::random_shift,
                            double jitter_scale = 0.1, SlotOrder order = SlotOrder::spread)
      : config_(std::move(standardized)), mode_(mode), jitter_scale_(jitter_scale) {
    require(config_.dim() == 1, ErrorCode::dimension_unsupported, "proposal sets are one-dimensional");
    require(config_.size() >= 2, ErrorCode::too_few_points, "proposal set needs N' >= 2");
    require(jitter_scale_ >= 0.0, ErrorCode::invalid_parameter, "jitter scale must be >= 0");
    if (order == SlotOrder::spread) {
      std::vector<std::size_t> by_x(config_.size());
      std::iota(by_x.begin(), by_x.end(), std::size_t{0});
      std::stable_sort(by_x.begin(), by_x.end(),
                       [&](std::size_t a, std::size_t b) { return config_.point(a)[0] < config_.point(b)[0]; });
      PointConfiguration reordered(1);
      for (std::size_t r : van_der_corput_ranks(config_.size()))
        reordered.push_back(config_.point(by_x[r]), config_.kappa(by_x[r]));
      config_ = std::move(reordered);
    }
    uniform_.reserve(config_.size());
    for (std::size_t k = 0; k < config_.size(); ++k) uniform_.push_back(normal_cdf(config_.point(k)[0]));
  }

  /// Generates an N'-point configuration for N(0, 1) on [-half_width, half_width].
  static RieszProposalSet standard_normal(std::size_t n_riesz, const RieszParams& riesz, SamplerConfig sampler,
                                          double half_width = kDefaultHalfWidth,
                                          Perturbation mode = Perturbation::random_shift,
                                          double jitter_scale = 0.1, SlotOrder order = SlotOrder::spread) {
    DensityOracle oracle{[](std::span<const double> x) { return normal_logpdf(x[0], 0.0, 1.0); },
                         Box::interval(-half_width, half_width)};
    sampler.n_points = n_riesz;
    auto report = generate_configuration(oracle, riesz, sampler);
    return RieszProposalSet(std::move(report.configuration), mode, jitter_scale, order);
  }

  static constexpr double kDefaultHalfWidth = 3.0;

  std::size_t size() const { return config_.size(); }
  const PointConfiguration& configuration() const { return config_; }
  Perturbation mode() const { return mode_; }
  double jitter_scale() const { return jitter_scale_; }

  /// Standardised location of slot k under a block shift (random_shift mode).
  double shifted_point(std::size_t k, double shift) const {
    double u = uniform_[k] + shift;
    u -= std::floor(u);
    return normal_quantile(u);
  }

  double standard_point(std::size_t k) const { return config_.point(k)[0]; }

  /// Density q used in the weight ratio.
  static double proposal_logpdf(double x, const GaussianProposal& q) { return normal_logpdf(x, q.mean, q.variance); }

 private:
  PointConfiguration config_;
  std::vector<double> uniform_;
  Perturbation mode_;
  double jitter_scale_;
};

struct StepResult {
  ParticleSystem system;
  double log_lik_increment = 0.0;
};

/// Moves particle i from prev.particles[ancestors[i]] to its Riesz slot and
/// weights it by g(y | x) f(x | x_prev) / q(x). The increment is
/// ln((1/n) sum_i w_i); the incoming cloud is assumed equally weighted.
template <StateSpaceModel Model>
StepResult propagate_and_weight(const ParticleSystem& prev, std::span<const std::size_t> ancestors, double y_t,
                                const Model& model, const RieszProposalSet& proposal, Rng& rng) {
  const std::size_t n = ancestors.size();
  require(n >= 1, ErrorCode::invalid_parameter, "need at least one particle");
  const std::size_t n_prime = proposal.size();

  std::vector<double> shifts;
  if (proposal.mode() == Perturbation::random_shift) {
    shifts.resize((n + n_prime - 1) / n_prime);
    for (auto& s : shifts) s = uniform01(rng);
  }

  StepResult out;
  auto& ps = out.system;
  ps.t = prev.t + 1;
  ps.ancestors.assign(ancestors.begin(), ancestors.end());
  ps.particles.resize(n);
  ps.log_weights.resize(n);
  ps.normalized_weights.resize(n);

  LogSumExp total;
  for (std::size_t i = 0; i < n; ++i) {
    require(ancestors[i] < prev.size(), ErrorCode::invalid_parameter, "ancestor index out of range");
    const double x_prev = prev.particles[ancestors[i]];
    const GaussianProposal q = model.proposal(x_prev, y_t);
    const std::size_t k = riesz_index(i, n_prime);
    double z;
    if (proposal.mode() == Perturbation::random_shift) {
      z = proposal.shifted_point(k, shifts[i / n_prime]);
    } else {
      z = proposal.standard_point(k) + proposal.jitter_scale() * standard_normal(rng);
    }
    const double x = q.mean + std::sqrt(q.variance) * z;
    const double lw = model.log_observation(y_t, x) + model.log_transition(x, x_prev) -
                      RieszProposalSet::proposal_logpdf(x, q);
    ps.particles[i] = x;
    ps.log_weights[i] = lw;
    total.add(lw);
  }
  const double log_total = total.value();
  require(std::isfinite(log_total), ErrorCode::all_weights_zero,
          "all importance weights vanished at t = " + std::to_string(ps.t));
  for (std::size_t i = 0; i < n; ++i) ps.normalized_weights[i] = std::exp(ps.log_weights[i] - log_total);
  out.log_lik_increment = log_total - std::log(static_cast<double>(n));
  return out;
}

struct FilterOptions {
  std::size_t n_particles = 100;
  ResamplingScheme resampling = ResamplingScheme::multinomial;
  bool record_intervals = false;
  /// Regenerate the standardised configuration every step (seeded from the
  /// filter's stream) instead of reusing one set; needs riesz/sampler below.
  bool regenerate_configuration = false;
  RieszParams riesz;
  SamplerConfig sampler;
  double half_width = RieszProposalSet::kDefaultHalfWidth;
};

namespace detail {

// Linear-interpolation sample quantile (type 7) of a scratch buffer.
inline double sample_quantile(std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

}  // namespace detail

template <StateSpaceModel Model>
FilterOutput run_filter(const Model& model, const std::vector<double>& obs, const RieszProposalSet& proposal,
                        const FilterOptions& opts, Rng& rng) {
  require(!obs.empty(), ErrorCode::series_too_short, "filter needs observations");
  const std::size_t n = opts.n_particles;
  require(n >= 1, ErrorCode::invalid_parameter, "n_particles must be >= 1");

  FilterOutput out;
  out.filtered_means.reserve(obs.size());
  out.weighted_means.reserve(obs.size());
  out.ess_trace.reserve(obs.size());

  ParticleSystem ps;
  ps.particles.resize(n);
  for (auto& x : ps.particles) x = model.sample_initial(rng);
  ps.normalized_weights.assign(n, 1.0 / static_cast<double>(n));
  ps.log_weights.assign(n, -std::log(static_cast<double>(n)));
  std::vector<std::size_t> ancestors(n);
  std::iota(ancestors.begin(), ancestors.end(), std::size_t{0});

  std::optional<RieszProposalSet> fresh;
  std::vector<double> scratch(n);
  for (double y : obs) {
    const RieszProposalSet* set = &proposal;
    if (opts.regenerate_configuration) {
      SamplerConfig sc = opts.sampler;
      sc.seed = rng();
      fresh.emplace(RieszProposalSet::standard_normal(proposal.size(), opts.riesz, sc, opts.half_width,
                                                      proposal.mode(), proposal.jitter_scale()));
      set = &*fresh;
    }
    auto step = propagate_and_weight(ps, ancestors, y, model, *set, rng);
    ps = std::move(step.system);
    out.log_likelihood += step.log_lik_increment;
    out.ess_trace.push_back(effective_sample_size(ps.normalized_weights));

    double wmean = 0.0;
    for (std::size_t i = 0; i < n; ++i) wmean += ps.normalized_weights[i] * ps.particles[i];
    out.weighted_means.push_back(wmean);

    ancestors = opts.resampling == ResamplingScheme::multinomial ? multinomial_resample(ps.normalized_weights, rng)
                                                                 : systematic_resample(ps.normalized_weights, rng);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      scratch[i] = ps.particles[ancestors[i]];
      mean += scratch[i];
    }
    out.filtered_means.push_back(mean / static_cast<double>(n));
    if (opts.record_intervals) {
      out.lower95.push_back(detail::sample_quantile(scratch, 0.025));
      out.upper95.push_back(detail::sample_quantile(scratch, 0.975));
    }
  }
  return out;
}

/// Builds the N'-point proposal set from `riesz` / `sampler` and runs the filter.
template <StateSpaceModel Model>
FilterOutput run_filter(const Model& model, const std::vector<double>& obs, std::size_t n, std::size_t n_prime,
                        const RieszParams& riesz, const SamplerConfig& sampler, Rng& rng,
                        FilterOptions opts = {}) {
  opts.n_particles = n;
  opts.riesz = riesz;
  opts.sampler = sampler;
  const auto set = RieszProposalSet::standard_normal(n_prime, riesz, sampler, opts.half_width);
  return run_filter(model, obs, set, opts, rng);
}

struct BiasMse {
  double log_bias = 0.0;
  double log_mse = 0.0;
};

inline constexpr double kLogZeroSentinel = -1e9;

/// Mean absolute error and mean squared error against the oracle, averaged
/// over all runs, reported as natural logs (-1e9 stands in for ln 0).
inline BiasMse log_bias_mse(const std::vector<std::vector<double>>& runs, const std::vector<double>& oracle) {
  require(!runs.empty(), ErrorCode::length_mismatch, "no runs supplied");
  double bias = 0.0;
  double mse = 0.0;
  for (const auto& filtered : runs) {
    require(filtered.size() == oracle.size() && !oracle.empty(), ErrorCode::length_mismatch,
            "filtered and oracle series differ in length");
    double b = 0.0;
    double m = 0.0;
    for (std::size_t t = 0; t < oracle.size(); ++t) {
      const double e = filtered[t] - oracle[t];
      b += std::abs(e);
      m += e * e;
    }
    bias += b / static_cast<double>(oracle.size());
    mse += m / static_cast<double>(oracle.size());
  }
  bias /= static_cast<double>(runs.size());
  mse /= static_cast<double>(runs.size());
  auto safe_log = [](double v) { return v > 0.0 ? std::log(v) : kLogZeroSentinel; };
  return {safe_log(bias), safe_log(mse)};
}

inline BiasMse log_bias_mse(const std::vector<double>& filtered, const std::vector<double>& oracle) {
  return log_bias_mse(std::vector<std::vector<double>>{filtered}, oracle);
}

}  // namespace rieszpf
