#pragma once

// Sequential one-point-at-a-time generation of weighted Riesz configurations.
//
//   1. start from the grid maximiser of the partial expectation
//      E(x) = int_0^x t f(t) dt;
//   2. propose the next point as the minimiser of the incremental energy
//      sum_i w(x_i, x) / |x_i - x|^s over a candidate pool;
//   3. accept it with the separation / distance-ratio rule, else redraw;
//   4. repeat until n points are placed, recording the log-energy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rieszpf/error.hpp"
#include "rieszpf/kappa.hpp"
#include "rieszpf/numeric.hpp"
#include "rieszpf/riesz_energy.hpp"

namespace rieszpf {

struct SamplerConfig {
  std::size_t n_points = 100;
  std::size_t candidate_count = 512;
  std::size_t refine_iters = 8;
  std::size_t max_retries = 64;
  std::uint64_t seed = 0;
  std::size_t grid_resolution = 0;  ///< per axis, for the initial point and kappa; 0 = default
  KappaRule kappa_rule = KappaRule::calibrated;

  void validate() const {
    require(n_points >= 2, ErrorCode::invalid_parameter, "n_points must be >= 2");
    require(candidate_count >= 8, ErrorCode::invalid_parameter, "candidate_count must be >= 8");
    require(max_retries >= 1, ErrorCode::invalid_parameter, "max_retries must be >= 1");
  }
};

struct GenerationReport {
  PointConfiguration configuration;
  std::size_t rejected_candidates = 0;
  double final_min_separation = 0.0;
  std::vector<double> energy_trace;

  bool operator==(const GenerationReport&) const = default;
};

/// Grid maximiser of the partial expectation. Each coordinate is chosen on the
/// marginal density of its axis; ties go to the smaller coordinate. The
/// integral is accumulated outward from the origin (clamped into the box).
inline std::vector<double> initial_point(const DensityOracle& oracle, std::size_t grid_resolution) {
  require(grid_resolution >= 2, ErrorCode::invalid_parameter, "grid_resolution must be >= 2");
  const std::size_t d = oracle.dim();
  const auto grid = uniform_grid(oracle.box, grid_resolution);
  const std::size_t total = grid.size() / d;

  std::vector<double> f(total);
  bool any_mass = false;
  for (std::size_t g = 0; g < total; ++g) {
    f[g] = std::exp(oracle.log_density(std::span<const double>(grid.data() + g * d, d)));
    any_mass = any_mass || f[g] > 0.0;
  }
  require(any_mass, ErrorCode::degenerate_density, "density is zero on the whole grid");

  std::vector<double> x0(d);
  for (std::size_t axis = 0; axis < d; ++axis) {
    // Marginal along `axis` on the tensor grid.
    std::vector<double> marginal(grid_resolution, 0.0);
    std::size_t stride = 1;
    for (std::size_t k = axis + 1; k < d; ++k) stride *= grid_resolution;
    for (std::size_t g = 0; g < total; ++g) marginal[(g / stride) % grid_resolution] += f[g];

    const double lo = oracle.box.low[axis];
    const double hi = oracle.box.high[axis];
    const double h = (hi - lo) / static_cast<double>(grid_resolution - 1);
    std::vector<double> t(grid_resolution);
    for (std::size_t i = 0; i < grid_resolution; ++i) t[i] = lo + h * static_cast<double>(i);

    // Node nearest the origin anchors the integral.
    const double origin = std::clamp(0.0, lo, hi);
    const auto anchor = static_cast<std::size_t>(std::llround((origin - lo) / h));

    std::vector<double> partial(grid_resolution, 0.0);
    for (std::size_t i = anchor + 1; i < grid_resolution; ++i)
      partial[i] = partial[i - 1] + 0.5 * h * (t[i - 1] * marginal[i - 1] + t[i] * marginal[i]);
    for (std::size_t i = anchor; i-- > 0;)
      partial[i] = partial[i + 1] - 0.5 * h * (t[i] * marginal[i] + t[i + 1] * marginal[i + 1]);

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid_resolution; ++i)
      if (partial[i] > partial[best]) best = i;
    x0[axis] = t[best];
  }
  return x0;
}

namespace detail {

/// ln sum_i w(x_i, x) / |x_i - x|^s, +inf when x is inadmissible.
inline double log_incremental_energy(const PointConfiguration& c, std::span<const double> x, double kx,
                                     const RieszParams& p) {
  LogSumExp acc;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double e = pair_energy_or_inf(c.point(i), x, c.kappa(i), kx, p);
    if (e == kInf) return kInf;
    acc.add(e);
  }
  return acc.value();
}

inline double score(const PointConfiguration& c, const KappaField& kappa, std::span<const double> x,
                    const RieszParams& p) {
  const double kx = kappa(x);
  if (!std::isfinite(kx)) return kInf;
  return log_incremental_energy(c, x, kx, p);
}

/// Coordinate descent with a halving step around `x`; consumes no randomness.
inline void refine(const PointConfiguration& c, const KappaField& kappa, const RieszParams& p,
                   std::vector<double>& x, double& best, std::size_t iters, std::size_t pool_size) {
  const Box& box = kappa.box();
  std::vector<double> step(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    step[k] = (box.high[k] - box.low[k]) / static_cast<double>(std::max<std::size_t>(pool_size, 1));
  std::vector<double> trial(x);
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (double sign : {1.0, -1.0}) {
        trial = x;
        trial[k] = std::clamp(x[k] + sign * step[k], box.low[k], box.high[k]);
        const double e = score(c, kappa, trial, p);
        if (e < best) {
          best = e;
          x = trial;
        }
      }
      step[k] *= 0.5;
    }
  }
}

}  // namespace detail

/// Minimiser of the incremental energy over a fixed candidate pool (row-major),
/// followed by `refine_iters` refinement passes. Ties keep the first candidate.
inline std::vector<double> propose_next_point(const PointConfiguration& c, const KappaField& kappa,
                                              const RieszParams& p, std::span<const double> candidates,
                                              std::size_t refine_iters = 0) {
  require(!c.empty(), ErrorCode::too_few_points, "configuration must hold at least one point");
  const std::size_t d = c.dim();
  require(candidates.size() % d == 0 && !candidates.empty(), ErrorCode::dimension_mismatch,
          "candidate pool does not match the configuration dimension");
  const std::size_t m = candidates.size() / d;
  std::size_t best_idx = m;
  double best = kInf;
  for (std::size_t j = 0; j < m; ++j) {
    const double e = detail::score(c, kappa, candidates.subspan(j * d, d), p);
    if (e < best) {
      best = e;
      best_idx = j;
    }
  }
  require(best_idx < m, ErrorCode::no_valid_candidate, "every candidate violates eps_dist or the bracket");
  std::vector<double> x(candidates.begin() + static_cast<std::ptrdiff_t>(best_idx * d),
                        candidates.begin() + static_cast<std::ptrdiff_t>((best_idx + 1) * d));
  if (refine_iters > 0) detail::refine(c, kappa, p, x, best, refine_iters, m);
  return x;
}

/// Draws `candidate_count` uniform candidates in the box (redrawing the pool up
/// to `max_retries` times when none is admissible) and returns the best one.
inline std::vector<double> propose_next_point(const PointConfiguration& c, const KappaField& kappa,
                                              const RieszParams& p, const SamplerConfig& cfg, Rng& rng) {
  require(!c.empty(), ErrorCode::too_few_points, "configuration must hold at least one point");
  const Box& box = kappa.box();
  const std::size_t d = box.dim();
  std::vector<double> pool(cfg.candidate_count * d);
  for (std::size_t attempt = 0; attempt < cfg.max_retries; ++attempt) {
    for (std::size_t j = 0; j < cfg.candidate_count; ++j)
      for (std::size_t k = 0; k < d; ++k)
        pool[j * d + k] = std::uniform_real_distribution<double>(box.low[k], box.high[k])(rng);
    try {
      return propose_next_point(c, kappa, p, pool, cfg.refine_iters);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_valid_candidate) throw;
    }
  }
  throw Error(ErrorCode::no_valid_candidate, "no admissible candidate after max_retries pools");
}

/// Separation check against the last point, then a U(0,1) test on
/// |x_new - x_last| / |x_last|. `origin_denominator` replaces |x_last| when
/// the last point sits at the origin.
inline bool accept_candidate(std::span<const double> x_new, std::span<const double> x_last,
                             double r_min_current, Rng& rng, double origin_denominator) {
  const double gap = distance(x_new, x_last);
  if (gap < r_min_current) return false;
  double denom = norm(x_last);
  if (denom == 0.0) denom = origin_denominator;
  return gap / denom >= uniform01(rng);
}

inline GenerationReport generate_configuration(const KappaField& kappa, const RieszParams& p,
                                               const SamplerConfig& cfg) {
  p.validate();
  cfg.validate();
  const Box& box = kappa.box();
  const std::size_t d = box.dim();
  const std::size_t grid = cfg.grid_resolution == 0 ? default_grid_per_axis(d) : cfg.grid_resolution;
  Rng rng(cfg.seed);

  GenerationReport report;
  report.configuration = PointConfiguration(d);
  auto& c = report.configuration;
  const auto x0 = initial_point(kappa.oracle(), grid);
  c.push_back(x0, kappa(x0));

  const std::size_t budget = cfg.max_retries * cfg.n_points;
  const double diameter = box.diameter();
  std::size_t draws = 0;
  double r_min = 0.0;  // running min separation; no constraint until a pair exists
  LogSumExp log_pairs;

  while (c.size() < cfg.n_points) {
    require(draws < budget, ErrorCode::budget_exhausted,
            "placed " + std::to_string(c.size()) + " of " + std::to_string(cfg.n_points) + " points");
    ++draws;
    const auto x = propose_next_point(c, kappa, p, cfg, rng);
    if (!accept_candidate(x, c.point(c.size() - 1), 0.5 * r_min, rng, diameter)) {
      ++report.rejected_candidates;
      continue;
    }
    const double kx = kappa(x);
    double nearest = kInf;
    for (std::size_t i = 0; i < c.size(); ++i) {
      nearest = std::min(nearest, distance(c.point(i), x));
      log_pairs.add(log_pair_energy(c.point(i), x, c.kappa(i), kx, p));
    }
    r_min = c.size() == 1 ? nearest : std::min(r_min, nearest);
    c.push_back(x, kx);
    report.energy_trace.push_back(log_pairs.value() / p.s);
  }
  report.final_min_separation = min_separation(c);
  return report;
}

/// Convenience overload building the kappa field from the oracle.
inline GenerationReport generate_configuration(const DensityOracle& oracle, const RieszParams& p,
                                               const SamplerConfig& cfg) {
  cfg.validate();
  KappaOptions opts;
  opts.rule = cfg.kappa_rule;
  opts.grid_per_axis = cfg.grid_resolution;
  return generate_configuration(KappaField(oracle, p, cfg.n_points, opts), p, cfg);
}

}  // namespace rieszpf
