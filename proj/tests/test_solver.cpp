#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <estqvi/analytic.hpp>
#include <estqvi/solver.hpp>

#include "fixtures.hpp"

using namespace estqvi;
using fixtures::rel;

namespace {

const Grid kGrid(0.01, 6.0, 1001);

double sup_rel_error(const std::vector<double>& v, const Grid& g, double lo, double hi,
                     auto&& exact) {
  double err = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double k = g.node(m);
    if (k < lo || k > hi) continue;
    err = std::max(err, rel(v[m], exact(k)));
  }
  return err;
}

} // namespace

TEST(Hamiltonian, ClosedFormExample) {
  const auto p = fixtures::benchmark();
  // Regime 2 at its threshold: no net output, slope 1 gives c = 1 and -1 - 1.
  const auto h = hamiltonian(p, 2, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(h.consumption, 1.0);
  EXPECT_DOUBLE_EQ(h.value, -2.0);
  EXPECT_DOUBLE_EQ(h.drift, -1.0);
}

TEST(Hamiltonian, NonpositiveSlopeTakesTheFloor) {
  const auto p = fixtures::benchmark();
  for (double s : {0.0, -1.0}) {
    EXPECT_EQ(detail::best_consumption(p.prefs, s, 1e-10, 5.0), 1e-10);
    EXPECT_EQ(detail::best_consumption(p.prefs, s, 0.15, 5.0), 0.15);
  }
  EXPECT_DOUBLE_EQ(detail::best_consumption(p.prefs, 4.0, 1e-10, 5.0), 0.5);
}

TEST(Hamiltonian, GridSearchMatchesClosedForm) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> K(0.05, 5.0), S(0.05, 50.0);
  const auto p = fixtures::three_regime();
  SolverConfig grid;
  grid.consumption_mode = ConsumptionMode::grid_search;
  grid.n_c = 5000;
  for (int n = 0; n < 300; ++n) {
    const double k = K(rng), s = S(rng);
    const RegimeId i = 1 + n % 3;
    const auto exact = hamiltonian(p, i, k, s);
    const auto approx = hamiltonian(p, i, k, s, grid);
    EXPECT_LE(approx.value, exact.value + 1e-12);
    EXPECT_NEAR(approx.value, exact.value, 1e-4) << "k=" << k << " s=" << s;
  }
}

TEST(Hamiltonian, UpwindUsesForwardSlopeForSaving) {
  const auto p = fixtures::benchmark();
  SolverConfig cfg;
  // Steep forward slope: save. The backward branch is unavailable.
  const auto h = upwind_hamiltonian(p, 1, 1.0, 400.0, std::nullopt, cfg, 10.0);
  EXPECT_GE(h.drift, 0.0);
  EXPECT_NEAR(h.consumption, 0.05, 1e-15);
  // Flat backward slope: dissave.
  const auto d = upwind_hamiltonian(p, 1, 1.0, std::nullopt, 1.0, cfg, 10.0);
  EXPECT_LE(d.drift, 0.0);
  EXPECT_DOUBLE_EQ(d.consumption, 1.0);
}

TEST(SwitchObstacle, Examples) {
  const std::vector<double> v{1.0, 2.0, 1.5};
  const auto costs = SwitchingCostMatrix::uniform(3, 0.1);
  const auto a = switch_obstacle(v, 1, costs);
  EXPECT_EQ(a.target, 2u);
  EXPECT_DOUBLE_EQ(a.value.value(), 1.9);
  const auto b = switch_obstacle(v, 2, costs);
  EXPECT_EQ(b.target, 3u);
  EXPECT_DOUBLE_EQ(b.value.value(), 1.4);
  const std::vector<double> one{1.0};
  const auto c = switch_obstacle(one, 1, SwitchingCostMatrix::vanishing(1));
  EXPECT_TRUE(c.value.is_minus_infinity());
  EXPECT_EQ(c.target, 0u);
}

TEST(SwitchObstacle, TiesPickSmallestIndex) {
  const std::vector<double> v{0.0, 2.0, 2.0};
  EXPECT_EQ(switch_obstacle(v, 1, SwitchingCostMatrix::vanishing(3)).target, 2u);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.tol = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.damping = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.consumption_mode = ConsumptionMode::grid_search;
  cfg.n_c = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_THROW(solve_qvi(fixtures::benchmark(), kGrid, cfg), std::invalid_argument);
}

TEST(SingleRegime, MatchesStayValue) {
  const auto p = fixtures::single_regime();
  const Grid g(0.01, 6.0, 40001);
  const auto sol = solve_qvi(p, g);
  ASSERT_TRUE(sol.diagnostics.converged);
  const double err = sup_rel_error(sol.value[0], g, 0.1, 5.0, [&](double k) {
    return analytic::stay_value(p, 1, k).value();
  });
  EXPECT_LE(err, 1e-3);
}

TEST(SingleRegime, ErrorShrinksUnderRefinement) {
  const auto p = fixtures::single_regime();
  auto err = [&](std::size_t n) {
    const Grid g(0.01, 6.0, n);
    const auto sol = solve_qvi(p, g);
    return sup_rel_error(sol.value[0], g, 0.1, 5.0, [&](double k) {
      return analytic::stay_value(p, 1, k).value();
    });
  };
  const double e1 = err(1001), e2 = err(2001), e3 = err(4001);
  EXPECT_GE(e1 / e2, 1.7);
  EXPECT_GE(e2 / e3, 1.7);
}

TEST(SingleRegime, VanishingAndQviAgree) {
  const auto p = fixtures::single_regime();
  const auto a = solve_vanishing(p, kGrid);
  const auto b = solve_qvi(p, kGrid);
  EXPECT_EQ(a.value, b.value[0]);
  EXPECT_TRUE(b.vanishing);
}

TEST(SingleRegime, ConsumptionTracksClosedForm) {
  const auto p = fixtures::single_regime();
  const Grid g(0.01, 6.0, 4001);
  const auto sol = solve_qvi(p, g);
  for (double k : {0.5, 1.0, 3.0})
    EXPECT_LT(rel(sol.interpolate_consumption(1, k), analytic::stay_consumption(p, 1, k)), 1e-2);
}

TEST(Vanishing, AnalyticPiecewiseValueIsALowerBound) {
  // The closed-form piecewise value is attained by a feasible policy, so it
  // can only lie below the numerical vanishing-cost value (up to O(h)).
  const auto p = fixtures::benchmark();
  const Grid g(0.01, 6.0, 4001);
  const auto sol = solve_vanishing(p, g);
  const auto an = analytic::two_regime_solution(p);
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double k = g.node(m);
    if (k < 0.5 || k > 5.0) continue;
    const double a = an(k).value();
    EXPECT_GE(sol.value[m] - a, -5e-3 * std::abs(a)) << "k=" << k;
  }
}

TEST(Vanishing, ActiveRegimeMaximizesNetOutput) {
  const auto p = fixtures::benchmark();
  const auto sol = solve_vanishing(p, kGrid);
  for (std::size_t m = 0; m < kGrid.size(); ++m) {
    const double k = kGrid.node(m);
    if (std::abs(k - 2.5) < 0.05) continue;
    EXPECT_EQ(sol.active[m], k < 2.5 ? 1u : 2u) << "k=" << k;
  }
}

TEST(Costs, SandwichForTheRegimeStartingBelow) {
  const auto van = solve_vanishing(fixtures::benchmark(), kGrid);
  for (double eta : {0.1, 0.01}) {
    const auto sol = solve_qvi(fixtures::costed(eta), kGrid);
    ASSERT_TRUE(sol.diagnostics.converged);
    for (std::size_t m = 0; m < kGrid.size(); ++m) {
      EXPECT_LE(sol.value[0][m], van.value[m] + 1e-9);
      EXPECT_GE(sol.value[0][m], van.value[m] - eta - 1e-9);
    }
  }
}

TEST(Costs, RegimesDifferByAtMostTheCost) {
  const double eta = 0.02;
  const auto sol = solve_qvi(fixtures::costed(eta), kGrid);
  for (std::size_t m = 0; m < kGrid.size(); ++m) {
    EXPECT_LE(sol.value[0][m], sol.value[1][m] + eta + 1e-12);
    EXPECT_LE(sol.value[1][m], sol.value[0][m] + eta + 1e-12);
  }
}

TEST(Costs, ValueDecreasesInCost) {
  const auto lo = solve_qvi(fixtures::costed(0.01), kGrid);
  const auto hi = solve_qvi(fixtures::costed(0.02), kGrid);
  for (RegimeId i = 1; i <= 2; ++i)
    for (std::size_t m = 0; m < kGrid.size(); ++m)
      EXPECT_LE(hi.value[i - 1][m], lo.value[i - 1][m] + 1e-9);
}

TEST(Costs, SmallCostsApproachTheVanishingValue) {
  const auto van = solve_vanishing(fixtures::benchmark(), kGrid);
  double prev = std::numeric_limits<double>::infinity();
  for (double eta : {0.1, 0.01, 0.001}) {
    const auto sol = solve_qvi(fixtures::costed(eta), kGrid);
    double gap = 0.0;
    for (std::size_t m = 0; m < kGrid.size(); ++m)
      gap = std::max(gap, std::abs(sol.value[0][m] - van.value[m]));
    EXPECT_LE(gap, eta + 1e-9);
    EXPECT_LE(gap, prev);
    prev = gap;
  }
}

TEST(Residual, ConvergedSolutionHasNoFlags) {
  for (double eta : {0.1, 0.01}) {
    const auto p = fixtures::costed(eta);
    const auto sol = solve_qvi(p, kGrid);
    const auto rep = qvi_residual(sol, p, SolverConfig{});
    EXPECT_TRUE(rep.flagged.empty());
    EXPECT_LE(rep.max_obstacle_violation, 1e-7);
  }
}

TEST(Residual, PerturbationIsLocal) {
  const auto p = fixtures::costed(0.01);
  const auto sol = solve_qvi(p, kGrid);
  auto hjb = [&](const DiscretizedSolution& s) {
    // Threshold below zero flags every node.
    const auto rep = qvi_residual(s, p, SolverConfig{}, -1.0);
    std::vector<double> out(s.grid.size());
    for (const auto& f : rep.flagged)
      if (f.regime == 1) out[f.node] = f.hjb;
    return out;
  };
  const auto base = hjb(sol);
  auto bumped = sol;
  const std::size_t m0 = 300;
  bumped.value[0][m0] += 1e-3;
  const auto after = hjb(bumped);
  for (std::size_t m = 0; m < kGrid.size(); ++m) {
    if (m + 1 >= m0 && m <= m0 + 1) continue;
    EXPECT_EQ(after[m], base[m]) << "node " << m;
  }
  EXPECT_NE(after[m0], base[m0]);
}

TEST(Residual, ConstantValueIsNotASolution) {
  const auto p = fixtures::benchmark();
  auto sol = solve_qvi(p, kGrid);
  for (auto& f : sol.value) std::fill(f.begin(), f.end(), -50.0);
  EXPECT_GT(qvi_residual(sol, p, SolverConfig{}).max_abs_residual, 1e-3);
}

TEST(Properties, ValueNondecreasingInCapital) {
  for (const auto& p : {fixtures::benchmark(), fixtures::costed(0.01), fixtures::three_regime()}) {
    const auto sol = solve_qvi(p, kGrid);
    for (const auto& f : sol.value)
      for (std::size_t m = 1; m < f.size(); ++m) EXPECT_GE(f[m], f[m - 1]);
  }
}

TEST(Properties, LinearGrowthBelowUnitGamma) {
  StationaryProblem p;
  p.prefs.gamma = 0.5;
  p.prefs.rho = 0.04;
  p.prefs.delta = 0.05;
  p.regimes = {{0.1, 0.0}};
  p.costs = SwitchingCostMatrix::vanishing(1);
  ASSERT_TRUE(validate_problem(p).valid());
  // Far from the closed-form case: convergence takes thousands of sweeps.
  const Grid g(0.01, 20.0, 501);
  SolverConfig cfg;
  cfg.max_iter = 20000;
  const auto sol = solve_qvi(p, g, cfg);
  ASSERT_TRUE(sol.diagnostics.converged);
  const double C = linear_growth_constant(sol);
  ASSERT_TRUE(std::isfinite(C));
  for (std::size_t m = 0; m < g.size(); ++m)
    EXPECT_LE(std::abs(sol.value[0][m]), 2.0 * C * (1.0 + g.node(m)));
  for (std::size_t m = 1; m < g.size(); ++m) EXPECT_GT(sol.value[0][m], sol.value[0][m - 1]);
}

TEST(Regions, SingleRegimeHasNoSwitching) {
  const auto sol = solve_qvi(fixtures::single_regime(), kGrid);
  const auto rep = extract_regions(sol);
  ASSERT_EQ(rep.regimes.size(), 1u);
  EXPECT_TRUE(rep.of(1).switch_pieces.empty());
  ASSERT_EQ(rep.of(1).continuation.size(), 1u);
  EXPECT_TRUE(rep.of(1).continuation[0].unbounded());
}

TEST(Regions, BenchmarkSwitchesUpOnce) {
  const auto sol = solve_qvi(fixtures::benchmark(), kGrid);
  const auto rep = extract_regions(sol);
  const auto& s1 = rep.of(1).switch_pieces;
  ASSERT_EQ(s1.size(), 1u);
  EXPECT_EQ(s1[0].target, 2u);
  EXPECT_TRUE(s1[0].interval.unbounded());
  EXPECT_NEAR(s1[0].interval.lo, 2.5, 2 * kGrid.spacing());
  EXPECT_EQ(*s1[0].last_node, kGrid.size() - 1);
  // Pieces and continuation intervals tile the grid.
  for (const auto& r : rep.regimes) {
    std::vector<Interval> all = r.continuation;
    for (const auto& piece : r.switch_pieces) all.push_back(piece.interval);
    std::sort(all.begin(), all.end(), [](auto a, auto b) { return a.lo < b.lo; });
    EXPECT_EQ(all.front().lo, kGrid.k_min());
    for (std::size_t m = 1; m < all.size(); ++m) EXPECT_EQ(all[m].lo, all[m - 1].hi);
  }
}

TEST(Regions, ComparativeAdvantage) {
  const auto sol = solve_qvi(fixtures::costed(0.05), kGrid);
  for (double k : {0.5, 2.0, 4.0}) {
    EXPECT_DOUBLE_EQ(comparative_advantage(sol, 1, 2, 1, k),
                     -comparative_advantage(sol, 1, 1, 2, k));
    EXPECT_EQ(comparative_advantage(sol, 2, 1, 1, k), 0.0);
  }
  // Switching at a node means the target's advantage over staying is >= 0.
  for (std::size_t m = 0; m < kGrid.size(); ++m) {
    if (const RegimeId j = sol.switch_to[0][m]) {
      EXPECT_GE(comparative_advantage(sol, 1, j, 1, kGrid.node(m)), -1e-7);
    }
  }
  EXPECT_THROW(comparative_advantage(sol, 3, 1, 2, 1.0), std::out_of_range);
}

TEST(Convergence, HarderProblemsConverge) {
  auto three = fixtures::three_regime();
  three.costs = SwitchingCostMatrix::uniform(3, 0.05);
  StationaryProblem log = fixtures::benchmark();
  log.prefs.gamma = 1.0;
  log.prefs.pi = 0.01;
  log.costs = SwitchingCostMatrix::uniform(2, 0.05);
  for (const auto& p : {three, log}) {
    const Grid g(0.01, 8.0, 1001);
    const auto sol = solve_qvi(p, g);
    EXPECT_TRUE(sol.diagnostics.converged);
    EXPECT_TRUE(qvi_residual(sol, p, SolverConfig{}).flagged.empty());
  }
}

TEST(Convergence, GridSearchAgreesWithClosedForm) {
  const auto p = fixtures::costed(0.01);
  const Grid g(0.05, 6.0, 301);
  SolverConfig gs;
  gs.consumption_mode = ConsumptionMode::grid_search;
  gs.n_c = 2000;
  const auto a = solve_qvi(p, g);
  const auto b = solve_qvi(p, g, gs);
  ASSERT_TRUE(b.diagnostics.converged);
  for (RegimeId i = 1; i <= 2; ++i)
    for (std::size_t m = 0; m < g.size(); ++m)
      EXPECT_LT(rel(b.value[i - 1][m], a.value[i - 1][m]), 1e-3);
}

TEST(Convergence, InvalidProblemIsRejected) {
  auto p = fixtures::benchmark();
  p.prefs.gamma = -1.0;
  EXPECT_THROW(solve_qvi(p, kGrid), PreconditionError);
}

TEST(Grid, Basics) {
  const Grid g(0.5, 1.5, 11);
  EXPECT_DOUBLE_EQ(g.spacing(), 0.1);
  EXPECT_EQ(g.node(10), 1.5);
  EXPECT_EQ(g.nearest(0.96), 5u);
  EXPECT_EQ(g.nearest(100.0), 10u);
  EXPECT_EQ(g.cell(1.5), 9u);
  EXPECT_THROW(Grid(0.0, 1.0, 11), std::invalid_argument);
  EXPECT_THROW(Grid(1.0, 1.0, 11), std::invalid_argument);
  EXPECT_THROW(Grid(0.5, 1.0, 2), std::invalid_argument);
}
