#pragma once

// Per-point kappa values derived from a target density.
//
// Two rules are provided:
//
//  * negative_log_density: kappa = max(-ln f + c0, floor), c0 chosen so the
//    smallest kappa on the evaluation grid equals `floor`.
//  * calibrated (default): kappa increases with f and is tuned so that the
//    nearest-neighbour cost  ln w(h/2) - s ln(h/2)  is level across the box
//    when the local spacing h follows the target density for n points,
//    h(x) = (n f(x) / Z)^{-1/d}. Solving for the bracket gives
//        alpha * kappa^2 = (1 + s ln(h / h_min))^{-2d/s} - beta h / 2.
//    Greedy minimisers of the weighted energy then place points with density
//    proportional to f; under the first rule they avoid the mode instead.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rieszpf/error.hpp"
#include "rieszpf/riesz_energy.hpp"

namespace rieszpf {

enum class KappaRule { calibrated, negative_log_density };

struct KappaOptions {
  KappaRule rule = KappaRule::calibrated;
  double floor = 1e-3;
  std::size_t grid_per_axis = 0;  ///< 0 picks 1000 (d = 1), 100 (d = 2) or 20
};

inline std::size_t default_grid_per_axis(std::size_t d) {
  if (d == 1) return 1000;
  if (d == 2) return 100;
  return 20;
}

/// Trapezoid weights of a tensor grid built by uniform_grid().
inline std::vector<double> trapezoid_weights(const Box& box, std::size_t per_axis) {
  const std::size_t d = box.dim();
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= per_axis;
  std::vector<double> w(total, 1.0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t k = d; k-- > 0;) {
      const std::size_t idx = rest % per_axis;
      rest /= per_axis;
      const double h = (box.high[k] - box.low[k]) / static_cast<double>(per_axis - 1);
      w[flat] *= (idx == 0 || idx + 1 == per_axis) ? 0.5 * h : h;
    }
  }
  return w;
}

class KappaField {
 public:
  KappaField(DensityOracle oracle, const RieszParams& params, std::size_t n_points, KappaOptions options = {})
      : oracle_(std::move(oracle)), params_(params), options_(options) {
    params_.validate();
    require(static_cast<bool>(oracle_.log_density), ErrorCode::invalid_parameter, "density oracle is empty");
    require(oracle_.dim() == params_.d, ErrorCode::dimension_mismatch, "oracle and params disagree on d");
    require(n_points >= 1, ErrorCode::invalid_parameter, "n_points must be >= 1");
    require(options_.floor > 0.0, ErrorCode::invalid_parameter, "kappa floor must be > 0");
    if (options_.rule == KappaRule::calibrated)
      require(params_.alpha > 0.0, ErrorCode::invalid_parameter, "calibrated kappa requires alpha > 0");

    const std::size_t per_axis =
        options_.grid_per_axis == 0 ? default_grid_per_axis(params_.d) : options_.grid_per_axis;
    const auto grid = uniform_grid(oracle_.box, per_axis);
    const auto weights = trapezoid_weights(oracle_.box, per_axis);
    const std::size_t d = params_.d;

    std::vector<double> logf(weights.size());
    LogSumExp log_mass;
    log_fmax_ = -kInf;
    for (std::size_t g = 0; g < weights.size(); ++g) {
      logf[g] = oracle_.log_density(std::span<const double>(grid.data() + g * d, d));
      log_fmax_ = std::max(log_fmax_, logf[g]);
      log_mass.add(logf[g] + std::log(weights[g]));
    }
    require(std::isfinite(log_fmax_), ErrorCode::degenerate_density, "density vanishes on the evaluation grid");
    log_mass_ = log_mass.value();
    log_n_ = std::log(static_cast<double>(n_points));
    diameter_ = oracle_.box.diameter();
  }

  double operator()(std::span<const double> x) const { return from_log_density(oracle_.log_density(x)); }

  double from_log_density(double logf) const {
    const double d = static_cast<double>(params_.d);
    if (options_.rule == KappaRule::negative_log_density) {
      if (logf == -kInf) return kInf;
      return std::max(-logf + log_fmax_ + options_.floor, options_.floor);
    }
    const double log_h_min = -(log_n_ + log_fmax_ - log_mass_) / d;
    const double log_h = logf == -kInf ? kInf : -(log_n_ + logf - log_mass_) / d;
    const double h = std::min(std::exp(std::min(log_h, 700.0)), diameter_);
    const double ratio = std::max(std::log(h) - log_h_min, 0.0);
    const double k2 =
        (std::pow(1.0 + params_.s * ratio, -1.0 / params_.bracket_exponent()) - params_.beta * h / 2.0) /
        params_.alpha;
    return std::sqrt(std::max(k2, options_.floor * options_.floor));
  }

  double log_density(std::span<const double> x) const { return oracle_.log_density(x); }
  const Box& box() const { return oracle_.box; }
  const DensityOracle& oracle() const { return oracle_; }
  const RieszParams& params() const { return params_; }

 private:
  DensityOracle oracle_;
  RieszParams params_;
  KappaOptions options_;
  double log_fmax_ = 0.0;
  double log_mass_ = 0.0;
  double log_n_ = 0.0;
  double diameter_ = 0.0;
};

}  // namespace rieszpf
