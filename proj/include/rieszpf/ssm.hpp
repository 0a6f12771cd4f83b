#pragma once

// Linear Gaussian (LGSS) and stochastic volatility (SV) state-space models,
// their densities and simulators, and the exact Kalman filter for LGSS.

#include <cmath>
#include <cstddef>
#include <vector>

#include "rieszpf/error.hpp"
#include "rieszpf/numeric.hpp"

namespace rieszpf {

/// x_t = phi x_{t-1} + v_t,  y_t = x_t + e_t,  v ~ N(0, sigma_v^2), e ~ N(0, sigma_o^2).
struct LgssParams {
  double phi = 0.75;
  double sigma_v = 1.0;
  double sigma_o = 0.1;

  void validate() const {
    require(std::abs(phi) < 1.0, ErrorCode::invalid_parameter, "LGSS |phi| must be < 1");
    require(sigma_v > 0.0, ErrorCode::invalid_parameter, "LGSS sigma_v must be > 0");
    require(sigma_o > 0.0, ErrorCode::invalid_parameter, "LGSS sigma_o must be > 0");
  }
};

/// Whether exp(x) * tau is the observation variance (default) or its standard deviation.
enum class SvScale { variance, std_dev };

/// x_0 ~ N(mu, sigma_v^2 / (1 - rho^2)), x_t ~ N(mu + rho (x_{t-1} - mu), sigma_v^2),
/// y_t ~ N(0, exp(x_t) tau).
struct SvParams {
  double mu = 0.0;
  double rho = 0.95;
  double sigma_v = 0.2;
  double tau = 1.0;
  SvScale scale = SvScale::variance;

  void validate() const {
    require(std::abs(rho) < 1.0, ErrorCode::invalid_parameter, "SV |rho| must be < 1");
    require(sigma_v > 0.0, ErrorCode::invalid_parameter, "SV sigma_v must be > 0");
    require(tau > 0.0, ErrorCode::invalid_parameter, "SV tau must be > 0");
  }

  double stationary_variance() const { return sigma_v * sigma_v / (1.0 - rho * rho); }
};

struct Trajectory {
  std::vector<double> states;        ///< x_0 .. x_T
  std::vector<double> observations;  ///< y_1 .. y_T
};

struct KalmanOutput {
  std::vector<double> filtered_means;
  std::vector<double> filtered_variances;
  double log_likelihood = 0.0;
};

struct GaussianProposal {
  double mean = 0.0;
  double variance = 1.0;
};

// ---------------------------------------------------------------- LGSS

inline Trajectory lgss_simulate(const LgssParams& p, std::size_t T, double x0, Rng& rng) {
  require(T >= 1, ErrorCode::invalid_parameter, "T must be >= 1");
  Trajectory tr;
  tr.states.reserve(T + 1);
  tr.observations.reserve(T);
  tr.states.push_back(x0);
  for (std::size_t t = 1; t <= T; ++t) {
    const double x = p.phi * tr.states.back() + p.sigma_v * standard_normal(rng);
    tr.states.push_back(x);
    tr.observations.push_back(x + p.sigma_o * standard_normal(rng));
  }
  return tr;
}

/// p(x_t | x_{t-1}, y_t) for the LGSS model.
inline GaussianProposal lgss_optimal_proposal(double x_prev, double y_t, const LgssParams& p) {
  const double prec_v = 1.0 / (p.sigma_v * p.sigma_v);
  const double prec_o = 1.0 / (p.sigma_o * p.sigma_o);
  const double var = 1.0 / (prec_v + prec_o);
  return {var * (prec_o * y_t + prec_v * p.phi * x_prev), var};
}

inline KalmanOutput kalman_filter(const LgssParams& p, const std::vector<double>& obs, double x0_mean,
                                  double x0_var) {
  require(!obs.empty(), ErrorCode::series_too_short, "Kalman filter needs observations");
  require(x0_var >= 0.0, ErrorCode::invalid_parameter, "x0_var must be >= 0");
  KalmanOutput out;
  out.filtered_means.reserve(obs.size());
  out.filtered_variances.reserve(obs.size());
  const double q = p.sigma_v * p.sigma_v;
  const double r = p.sigma_o * p.sigma_o;
  double m = x0_mean;
  double P = x0_var;
  for (double y : obs) {
    const double m_pred = p.phi * m;
    const double P_pred = p.phi * p.phi * P + q;
    const double S = P_pred + r;
    out.log_likelihood += normal_logpdf(y, m_pred, S);
    m = m_pred + P_pred / S * (y - m_pred);
    P = P_pred * r / S;
    out.filtered_means.push_back(m);
    out.filtered_variances.push_back(P);
  }
  return out;
}

// ---------------------------------------------------------------- SV

inline double sv_prior_logpdf(double x0, const SvParams& p) {
  return normal_logpdf(x0, p.mu, p.stationary_variance());
}

inline double sv_transition_logpdf(double x_t, double x_prev, const SvParams& p) {
  return normal_logpdf(x_t, p.mu + p.rho * (x_prev - p.mu), p.sigma_v * p.sigma_v);
}

/// Observation variance exp(x) * tau, or (exp(x) * tau)^2 under SvScale::std_dev.
inline double sv_observation_variance(double x_t, const SvParams& p) {
  const double v = std::exp(x_t) * p.tau;
  return p.scale == SvScale::variance ? v : v * v;
}

inline double sv_observation_logpdf(double y_t, double x_t, const SvParams& p) {
  return normal_logpdf(y_t, 0.0, sv_observation_variance(x_t, p));
}

inline Trajectory sv_simulate(const SvParams& p, std::size_t T, Rng& rng) {
  require(T >= 1, ErrorCode::invalid_parameter, "T must be >= 1");
  Trajectory tr;
  tr.states.reserve(T + 1);
  tr.observations.reserve(T);
  tr.states.push_back(p.mu + std::sqrt(p.stationary_variance()) * standard_normal(rng));
  for (std::size_t t = 1; t <= T; ++t) {
    const double x = p.mu + p.rho * (tr.states.back() - p.mu) + p.sigma_v * standard_normal(rng);
    tr.states.push_back(x);
    tr.observations.push_back(std::sqrt(sv_observation_variance(x, p)) * standard_normal(rng));
  }
  return tr;
}

/// Laplace (mode / curvature) Gaussian fit to f(x_t | x_{t-1}) g(y_t | x_t).
inline GaussianProposal sv_gaussian_proposal(double x_prev, double y_t, const SvParams& p) {
  // ln g = -c x / 2 - y^2 e^{-c x} / (2k) + const, with variance k e^{c x}.
  const double c = p.scale == SvScale::variance ? 1.0 : 2.0;
  const double k = p.scale == SvScale::variance ? p.tau : p.tau * p.tau;
  const double m0 = p.mu + p.rho * (x_prev - p.mu);
  const double prec0 = 1.0 / (p.sigma_v * p.sigma_v);
  const double y2 = y_t * y_t;
  auto objective = [&](double x) {
    return -0.5 * prec0 * (x - m0) * (x - m0) - 0.5 * c * x - y2 * std::exp(-c * x) / (2.0 * k);
  };
  double x = m0;
  double fx = objective(x);
  for (int it = 0; it < 50; ++it) {
    const double e = y2 * std::exp(-c * x) / (2.0 * k);
    const double grad = -prec0 * (x - m0) - 0.5 * c + c * e;
    const double hess = -prec0 - c * c * e;
    double step = -grad / hess;
    double trial = x + step;
    double ft = objective(trial);
    while (ft < fx && std::abs(step) > 1e-12) {
      step *= 0.5;
      trial = x + step;
      ft = objective(trial);
    }
    x = trial;
    fx = ft;
    if (std::abs(step) < 1e-10) break;
  }
  const double curvature = prec0 + c * c * y2 * std::exp(-c * x) / (2.0 * k);
  return {x, 1.0 / curvature};
}

}  // namespace rieszpf
