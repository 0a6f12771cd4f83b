#pragma once

// Weighted Riesz pair potential, configuration energy and geometric
// diagnostics (separation, covering radius, uniformity).
//
// The pair weight is kept in log domain throughout: with the default
// exponent s = 40 a plain evaluation of w / r^s overflows for r < 0.1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rieszpf/error.hpp"
#include "rieszpf/numeric.hpp"

namespace rieszpf {

struct RieszParams {
  double s = 40.0;       ///< Riesz exponent
  std::size_t d = 1;     ///< ambient dimension
  double alpha = 1.0;    ///< scale on the kappa product inside the bracket
  double beta = 2.0;     ///< local discrepancy coefficient
  double eps_dist = 1e-9;

  void validate() const {
    require(d >= 1, ErrorCode::invalid_parameter, "RieszParams.d must be >= 1");
    require(s > static_cast<double>(d), ErrorCode::invalid_parameter, "RieszParams.s must exceed d");
    require(beta >= 0.0, ErrorCode::invalid_parameter, "RieszParams.beta must be >= 0");
    require(eps_dist > 0.0, ErrorCode::invalid_parameter, "RieszParams.eps_dist must be > 0");
  }

  /// Exponent s / (2d) applied to the bracket.
  double bracket_exponent() const { return s / (2.0 * static_cast<double>(d)); }
};

inline double distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::dimension_mismatch, "points differ in dimension");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

inline double norm(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

/// Axis-aligned box [low, high].
struct Box {
  std::vector<double> low;
  std::vector<double> high;

  Box() = default;
  Box(std::vector<double> lo, std::vector<double> hi) : low(std::move(lo)), high(std::move(hi)) {
    require(low.size() == high.size() && !low.empty(), ErrorCode::dimension_mismatch,
            "box bounds must share a non-zero dimension");
    for (std::size_t k = 0; k < low.size(); ++k)
      require(std::isfinite(low[k]) && std::isfinite(high[k]) && low[k] < high[k],
              ErrorCode::invalid_parameter, "box must be finite with low < high");
  }

  static Box interval(double lo, double hi) { return Box({lo}, {hi}); }

  std::size_t dim() const { return low.size(); }

  double diameter() const { return distance(low, high); }

  bool contains(std::span<const double> x) const {
    for (std::size_t k = 0; k < dim(); ++k)
      if (x[k] < low[k] || x[k] > high[k]) return false;
    return true;
  }
};

/// Ordered points in R^dim with their kappa values, stored row-major.
class PointConfiguration {
 public:
  explicit PointConfiguration(std::size_t dim = 1) : dim_(dim) {
    require(dim >= 1, ErrorCode::invalid_parameter, "configuration dimension must be >= 1");
  }

  PointConfiguration(std::size_t dim, std::vector<double> coords, std::vector<double> kappa)
      : dim_(dim), coords_(std::move(coords)), kappa_(std::move(kappa)) {
    require(dim >= 1, ErrorCode::invalid_parameter, "configuration dimension must be >= 1");
    require(coords_.size() % dim_ == 0, ErrorCode::dimension_mismatch,
            "coordinate count is not a multiple of the dimension");
    require(kappa_.size() == coords_.size() / dim_, ErrorCode::length_mismatch,
            "one kappa value per point is required");
  }

  /// One-dimensional configuration with every kappa set to `kappa`.
  static PointConfiguration on_line(std::vector<double> xs, double kappa = 1.0) {
    std::vector<double> k(xs.size(), kappa);
    return PointConfiguration(1, std::move(xs), std::move(k));
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return kappa_.size(); }
  bool empty() const { return kappa_.empty(); }

  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double kappa(std::size_t i) const { return kappa_[i]; }

  const std::vector<double>& coordinates() const { return coords_; }
  const std::vector<double>& kappa_values() const { return kappa_; }

  void push_back(std::span<const double> x, double kappa) {
    require(x.size() == dim_, ErrorCode::dimension_mismatch, "point dimension mismatch");
    coords_.insert(coords_.end(), x.begin(), x.end());
    kappa_.push_back(kappa);
  }

  bool operator==(const PointConfiguration&) const = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> kappa_;
};

/// Target density f given as ln f, restricted to an evaluation box.
struct DensityOracle {
  std::function<double(std::span<const double>)> log_density;
  Box box;

  std::size_t dim() const { return box.dim(); }
};

/// ln w = a^{-s/(2d)} with bracket a = alpha * ki * kj + beta * |xi - xj|.
inline double log_pair_weight(std::span<const double> xi, std::span<const double> xj, double ki,
                              double kj, const RieszParams& p) {
  const double r = distance(xi, xj);
  require(r >= p.eps_dist, ErrorCode::degenerate_distance,
          "pair distance " + std::to_string(r) + " below eps_dist");
  const double a = p.alpha * ki * kj + p.beta * r;
  require(a > 0.0, ErrorCode::non_positive_bracket, "bracket " + std::to_string(a) + " is not positive");
  return std::pow(a, -p.bracket_exponent());
}

/// ln( w(xi, xj) / |xi - xj|^s ).
inline double log_pair_energy(std::span<const double> xi, std::span<const double> xj, double ki,
                              double kj, const RieszParams& p) {
  const double lw = log_pair_weight(xi, xj, ki, kj, p);
  return lw - p.s * std::log(distance(xi, xj));
}

namespace detail {

// Non-throwing pair energy used in hot loops; +inf marks an inadmissible pair.
inline double pair_energy_or_inf(std::span<const double> xi, std::span<const double> xj, double ki,
                                 double kj, const RieszParams& p) {
  double acc = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double diff = xi[k] - xj[k];
    acc += diff * diff;
  }
  const double r = std::sqrt(acc);
  if (!(r >= p.eps_dist)) return kInf;
  const double a = p.alpha * ki * kj + p.beta * r;
  if (!(a > 0.0)) return kInf;
  return std::pow(a, -p.bracket_exponent()) - p.s * std::log(r);
}

}  // namespace detail

/// Log of the weighted Riesz energy: (1/s) * ln sum_{i<j} w_ij / r_ij^s.
inline double config_energy(const PointConfiguration& c, const RieszParams& p) {
  require(c.size() >= 2, ErrorCode::too_few_points, "energy needs at least two points");
  LogSumExp acc;
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      acc.add(log_pair_energy(c.point(i), c.point(j), c.kappa(i), c.kappa(j), p));
  return acc.value() / p.s;
}

inline double min_separation(const PointConfiguration& c) {
  require(c.size() >= 2, ErrorCode::too_few_points, "separation needs at least two points");
  double best = kInf;
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) best = std::min(best, distance(c.point(i), c.point(j)));
  return best;
}

/// Largest distance from a reference point to its nearest configuration point.
/// `reference` is row-major with the configuration's dimension.
inline double covering_radius(const PointConfiguration& c, std::span<const double> reference) {
  require(!reference.empty(), ErrorCode::empty_reference, "reference set is empty");
  require(reference.size() % c.dim() == 0, ErrorCode::dimension_mismatch,
          "reference coordinates do not match the configuration dimension");
  require(!c.empty(), ErrorCode::too_few_points, "configuration is empty");
  const std::size_t m = reference.size() / c.dim();
  double worst = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const auto y = reference.subspan(r * c.dim(), c.dim());
    double nearest = kInf;
    for (std::size_t i = 0; i < c.size(); ++i) nearest = std::min(nearest, distance(y, c.point(i)));
    worst = std::max(worst, nearest);
  }
  return worst;
}

/// Tensor grid with `per_axis` nodes per axis (endpoints included), row-major.
inline std::vector<double> uniform_grid(const Box& box, std::size_t per_axis) {
  require(per_axis >= 2, ErrorCode::invalid_parameter, "grid needs at least two nodes per axis");
  const std::size_t d = box.dim();
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= per_axis;
  std::vector<double> out(total * d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t k = d; k-- > 0;) {
      const std::size_t idx = rest % per_axis;
      rest /= per_axis;
      const double t = static_cast<double>(idx) / static_cast<double>(per_axis - 1);
      out[flat * d + k] = box.low[k] + t * (box.high[k] - box.low[k]);
    }
  }
  return out;
}

/// Kolmogorov-Smirnov distance between the points pushed through `target_cdf`
/// and the uniform law on [0, 1].
inline double uniformity_statistic(const PointConfiguration& c, const std::function<double(double)>& target_cdf) {
  require(c.dim() == 1, ErrorCode::dimension_unsupported, "uniformity statistic is one-dimensional");
  require(!c.empty(), ErrorCode::too_few_points, "configuration is empty");
  std::vector<double> u(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) u[i] = target_cdf(c.point(i)[0]);
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double above = static_cast<double>(i + 1) / n - u[i];
    const double below = u[i] - static_cast<double>(i) / n;
    stat = std::max({stat, above, below});
  }
  return stat;
}

}  // namespace rieszpf
