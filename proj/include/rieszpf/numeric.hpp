#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <span>

#include <boost/math/special_functions/erf.hpp>

namespace rieszpf {

/// Random stream used throughout. Every stochastic routine takes one by reference.
using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Streaming log-sum-exp. Handles -inf terms and +inf (absorbing).
class LogSumExp {
 public:
  void add(double v) {
    if (std::isnan(v)) {
      max_ = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    if (v == -kInf) return;
    if (v <= max_) {
      sum_ += std::exp(v - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - v) + 1.0;
      max_ = v;
    }
  }

  double value() const {
    if (std::isnan(max_)) return max_;
    if (max_ == -kInf) return -kInf;
    if (max_ == kInf) return kInf;
    return max_ + std::log(sum_);
  }

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> values) {
  LogSumExp acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

inline double normal_logpdf(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance) + z * z / variance);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal quantile; p is clamped into the open unit interval.
inline double normal_quantile(double p) {
  constexpr double tiny = std::numeric_limits<double>::min();
  p = std::clamp(p, tiny, 1.0 - std::numeric_limits<double>::epsilon() / 2);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

/// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent child seed for a (base, tags...) tuple.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(base);
  for (auto t : tags) h = mix64(h ^ mix64(t));
  return h;
}

}  // namespace rieszpf
