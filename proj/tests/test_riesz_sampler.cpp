#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rieszpf/riesz_sampler.hpp"

using namespace rieszpf;

namespace {

DensityOracle uniform01_oracle() {
  return {[](std::span<const double>) { return 0.0; }, Box::interval(0.0, 1.0)};
}

DensityOracle standard_normal_oracle(double hw) {
  return {[](std::span<const double> x) { return normal_logpdf(x[0], 0.0, 1.0); }, Box::interval(-hw, hw)};
}

// Log incremental energy in long double, written out independently.
long double brute_log_incremental(const PointConfiguration& c, double x, double kx, const RieszParams& p) {
  std::vector<long double> terms;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const long double r = std::fabs(static_cast<long double>(x) - c.point(i)[0]);
    if (r < p.eps_dist) return INFINITY;
    const long double a = static_cast<long double>(p.alpha) * c.kappa(i) * kx + p.beta * r;
    if (a <= 0) return INFINITY;
    terms.push_back(std::pow(a, -static_cast<long double>(p.s) / (2.0L * p.d)) - p.s * std::log(r));
  }
  const long double m = *std::max_element(terms.begin(), terms.end());
  long double sum = 0.0L;
  for (long double t : terms) sum += std::exp(t - m);
  return m + std::log(sum);
}

}  // namespace

TEST(InitialPoint, UniformPicksUpperEdge) {
  const auto x0 = initial_point(uniform01_oracle(), 1001);
  EXPECT_DOUBLE_EQ(x0[0], 1.0);
}

TEST(InitialPoint, NarrowGaussianSaturatesNearUpperEdge) {
  DensityOracle o{[](std::span<const double> x) { return normal_logpdf(x[0], 0.5, 0.01); }, Box::interval(0.0, 1.0)};
  const std::size_t grid = 10000;
  const auto x0 = initial_point(o, grid);
  EXPECT_LE(std::abs(x0[0] - 1.0), 1.0 / (grid - 1) + 1e-12);
}

TEST(InitialPoint, StandardNormalMatchesClosedFormQuadrature) {
  // int_0^x t phi(t) dt = phi(0) - phi(x): maximal at both box edges.
  const std::size_t grid = 1001;
  auto closed = [](double x) {
    return (1.0L - std::exp(-0.5L * x * x)) / std::sqrt(2.0L * std::numbers::pi_v<long double>);
  };
  long double best_val = 0.0L;
  for (std::size_t i = 0; i < grid; ++i) best_val = std::max(best_val, closed(-5.0 + 0.01 * i));
  const auto x0 = initial_point(standard_normal_oracle(5.0), grid);
  EXPECT_DOUBLE_EQ(std::abs(x0[0]), 5.0);
  EXPECT_NEAR(static_cast<double>(closed(x0[0])), static_cast<double>(best_val), 1e-9);
}

TEST(InitialPoint, ExactTieGoesToSmallerCoordinate) {
  // Mass only at the two edge nodes; both partial sums equal 0.5 exactly.
  DensityOracle o{[](std::span<const double> x) { return std::abs(x[0]) == 1.0 ? 0.0 : -kInf; },
                  Box::interval(-1.0, 1.0)};
  const auto x0 = initial_point(o, 3);
  EXPECT_DOUBLE_EQ(x0[0], -1.0);
}

TEST(InitialPoint, DegenerateDensity) {
  DensityOracle o{[](std::span<const double>) { return -kInf; }, Box::interval(0.0, 1.0)};
  try {
    initial_point(o, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_density);
  }
}

TEST(ProposeNextPoint, SymmetricTieKeepsFirstCandidate) {
  RieszParams p;
  KappaField k(uniform01_oracle(), p, 10);
  auto c = PointConfiguration(1);
  c.push_back(std::vector<double>{0.5}, k(std::vector<double>{0.5}));
  const std::vector<double> cands{0.1, 0.9};
  EXPECT_DOUBLE_EQ(propose_next_point(c, k, p, cands)[0], 0.1);
  const std::vector<double> rev{0.9, 0.1};
  EXPECT_DOUBLE_EQ(propose_next_point(c, k, p, rev)[0], 0.9);
}

TEST(ProposeNextPoint, FartherCandidateWins) {
  RieszParams p;
  KappaField k(uniform01_oracle(), p, 10);
  auto c = PointConfiguration(1);
  c.push_back(std::vector<double>{0.0}, k(std::vector<double>{0.0}));
  const std::vector<double> cands{0.1, 0.5};
  EXPECT_DOUBLE_EQ(propose_next_point(c, k, p, cands)[0], 0.5);
}

TEST(ProposeNextPoint, GridArgminMatchesBruteForce) {
  RieszParams p;
  const auto oracle = standard_normal_oracle(3.0);
  KappaField k(oracle, p, 100);
  std::vector<double> grid = uniform_grid(oracle.box, 101);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    PointConfiguration c(1);
    for (std::size_t n = 2 + trial % 9; c.size() < n;) {
      const double x = u(rng);
      c.push_back(std::vector<double>{x}, k(std::vector<double>{x}));
    }
    long double best_e = INFINITY;
    for (double g : grid) best_e = std::min(best_e, brute_log_incremental(c, g, k(std::vector<double>{g}), p));
    ASSERT_TRUE(std::isfinite(static_cast<double>(best_e)));
    const auto x = propose_next_point(c, k, p, grid);
    const long double chosen = brute_log_incremental(c, x[0], k(x), p);
    EXPECT_LE(std::fabs(chosen - best_e), 1e-12L * std::max(1.0L, std::fabs(best_e))) << "trial " << trial;
  }
}

TEST(ProposeNextPoint, NoValidCandidate) {
  RieszParams p;
  KappaField k(uniform01_oracle(), p, 10);
  auto c = PointConfiguration::on_line({0.5}, 1.0);
  const std::vector<double> cands{0.5, 0.5};
  try {
    propose_next_point(c, k, p, cands);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_valid_candidate);
  }
}

TEST(AcceptCandidate, LargeRatioAlwaysAccepted) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i)
    EXPECT_TRUE(accept_candidate(std::vector<double>{-0.5}, std::vector<double>{0.5}, 0.1, rng, 2.0));
}

TEST(AcceptCandidate, BelowSeparationAlwaysRejected) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i)
    EXPECT_FALSE(accept_candidate(std::vector<double>{0.55}, std::vector<double>{0.5}, 0.1, rng, 2.0));
}

TEST(AcceptCandidate, RatioHalfAcceptsHalfTheTime) {
  Rng rng(2);
  std::size_t hits = 0;
  const std::size_t trials = 100000;
  for (std::size_t i = 0; i < trials; ++i)
    hits += accept_candidate(std::vector<double>{1.5}, std::vector<double>{1.0}, 0.0, rng, 2.0);
  EXPECT_NEAR(static_cast<double>(hits) / trials, 0.5, 0.01);
}

TEST(AcceptCandidate, OriginUsesSubstituteDenominator) {
  Rng rng(3);
  std::size_t hits = 0;
  for (int i = 0; i < 100000; ++i)
    hits += accept_candidate(std::vector<double>{0.5}, std::vector<double>{0.0}, 0.0, rng, 2.0);
  EXPECT_NEAR(hits / 100000.0, 0.25, 0.01);
}

TEST(GenerateConfiguration, TwoPointsOnUnitIntervalSpreadToEnds) {
  SamplerConfig cfg;
  cfg.n_points = 2;
  cfg.seed = 4;
  const auto rep = generate_configuration(uniform01_oracle(), RieszParams{}, cfg);
  // Exhaustive optimum on the 101 x 101 grid: the pair {0, 1}.
  RieszParams p;
  const double k = KappaField(uniform01_oracle(), p, 2)(std::vector<double>{0.5});
  double best = kInf;
  double best_sep = 0.0;
  for (int i = 0; i <= 100; ++i)
    for (int j = i + 1; j <= 100; ++j) {
      const double e = log_pair_energy(std::vector<double>{i / 100.0}, std::vector<double>{j / 100.0}, k, k, p);
      if (e < best) {
        best = e;
        best_sep = (j - i) / 100.0;
      }
    }
  EXPECT_DOUBLE_EQ(best_sep, 1.0);
  EXPECT_GT(rep.final_min_separation, 0.1);
  EXPECT_GT(rep.final_min_separation, 0.95 * best_sep);
}

TEST(GenerateConfiguration, DeterministicAndWellFormed) {
  SamplerConfig cfg;
  cfg.n_points = 60;
  cfg.seed = 12;
  const auto a = generate_configuration(standard_normal_oracle(5.0), RieszParams{}, cfg);
  const auto b = generate_configuration(standard_normal_oracle(5.0), RieszParams{}, cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.configuration.size(), 60u);
  EXPECT_EQ(a.energy_trace.size(), 59u);
  for (double e : a.energy_trace) EXPECT_TRUE(std::isfinite(e));
  for (std::size_t k = 1; k < a.configuration.size(); ++k)
    for (std::size_t i = 0; i < k; ++i)
      EXPECT_GE(distance(a.configuration.point(i), a.configuration.point(k)), RieszParams{}.eps_dist);
  EXPECT_DOUBLE_EQ(a.final_min_separation, min_separation(a.configuration));
  EXPECT_NEAR(a.energy_trace.back(), config_energy(a.configuration, RieszParams{}), 1e-12);
}

TEST(GenerateConfiguration, KsImprovesFrom20To200) {
  SamplerConfig cfg;
  cfg.seed = 5;
  cfg.n_points = 20;
  const auto small = generate_configuration(standard_normal_oracle(5.0), RieszParams{}, cfg);
  cfg.n_points = 200;
  const auto large = generate_configuration(standard_normal_oracle(5.0), RieszParams{}, cfg);
  EXPECT_LT(uniformity_statistic(large.configuration, normal_cdf),
            uniformity_statistic(small.configuration, normal_cdf));
}

TEST(GenerateConfiguration, SeparationScaledByRateStaysBoundedBelow) {
  RieszParams p;
  for (std::size_t n : {20u, 50u, 100u}) {
    SamplerConfig cfg;
    cfg.n_points = n;
    cfg.seed = 21;
    const auto rep = generate_configuration(standard_normal_oracle(5.0), p, cfg);
    const double scaled = rep.final_min_separation * std::pow(static_cast<double>(n), 1.0 + 2.0 / p.s);
    EXPECT_GT(rep.final_min_separation, 0.0);
    EXPECT_GT(scaled, 1.0) << "n = " << n;
  }
}

TEST(GenerateConfiguration, CoveringRadiusDecaysOnUniformTarget) {
  const auto grid = uniform_grid(Box::interval(0.0, 1.0), 1001);
  double prev = kInf;
  for (std::size_t n : {10u, 20u, 40u, 80u}) {
    SamplerConfig cfg;
    cfg.n_points = n;
    cfg.seed = 30;
    const auto rep = generate_configuration(uniform01_oracle(), RieszParams{}, cfg);
    const double cr = covering_radius(rep.configuration, grid);
    EXPECT_LE(cr, 1.05 * prev) << "n = " << n;
    prev = cr;
  }
}

TEST(GenerateConfiguration, BudgetExhausted) {
  SamplerConfig cfg;
  cfg.n_points = 200;
  cfg.max_retries = 1;
  cfg.seed = 1;
  try {
    generate_configuration(uniform01_oracle(), RieszParams{}, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::budget_exhausted);
  }
}

TEST(SamplerConfig, Validation) {
  SamplerConfig cfg;
  cfg.n_points = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.candidate_count = 4;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.max_retries = 0;
  EXPECT_THROW(cfg.validate(), Error);
}
