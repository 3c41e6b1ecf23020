#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <estqvi/problem.hpp>

#include "fixtures.hpp"

using namespace estqvi;

TEST(Validate, BenchmarkIsValid) {
  const auto p = fixtures::benchmark();
  const auto rep = validate_problem(p);
  EXPECT_TRUE(rep.valid());
  // rho + (A_i - delta)(gamma - 1) evaluated by hand.
  EXPECT_NEAR(p.finiteness_margin(1), 0.04 + 0.15, 1e-15);
  EXPECT_NEAR(p.finiteness_margin(2), 0.04 + 0.25, 1e-15);
  ASSERT_EQ(rep.growth_margins.size(), 2u);
  EXPECT_NEAR(rep.growth_margins[0], 0.11, 1e-15);
  EXPECT_NEAR(rep.growth_margins[1], 0.21, 1e-15);
}

TEST(Validate, DiagonalCostIsNamed) {
  auto p = fixtures::benchmark();
  p.costs = SwitchingCostMatrix({{0.1, 0.2}, {0.2, 0.0}});
  const auto rep = validate_problem(p);
  ASSERT_TRUE(rep.has("diagonal_cost_nonzero"));
  EXPECT_NE(rep.violations.front().message.find("diagonal cost nonzero"), std::string::npos);
}

TEST(Validate, TriangleInequality) {
  auto p = fixtures::three_regime();
  p.costs = SwitchingCostMatrix({{0.0, 1.0, 3.0}, {1.0, 0.0, 1.0}, {1.0, 1.0, 0.0}});
  const auto rep = validate_problem(p);
  ASSERT_TRUE(rep.has("triangle_inequality"));
  bool named = false;
  for (const auto& v : rep.violations)
    named |= v.message.find("triangle inequality") != std::string::npos;
  EXPECT_TRUE(named);
}

TEST(Validate, EqualCostsSatisfyTriangle) {
  auto p = fixtures::three_regime();
  p.costs = SwitchingCostMatrix::uniform(3, 0.5);
  EXPECT_TRUE(validate_problem(p).valid());
}

TEST(Validate, VanishingCostsAreAdmitted) {
  auto p = fixtures::three_regime();
  EXPECT_TRUE(p.costs.is_vanishing());
  EXPECT_TRUE(validate_problem(p).valid());
}

TEST(Validate, RejectsEverySingleMutation) {
  struct Case {
    const char* code;
    void (*mutate)(StationaryProblem&);
  };
  const Case cases[] = {
      {"gamma_nonpositive", [](StationaryProblem& p) { p.prefs.gamma = 0.0; }},
      {"delta_negative", [](StationaryProblem& p) { p.prefs.delta = -0.01; }},
      {"pi_negative", [](StationaryProblem& p) { p.prefs.pi = -0.01; }},
      {"discount_nonpositive", [](StationaryProblem& p) { p.prefs.pi = 0.04; }},
      {"no_regimes", [](StationaryProblem& p) { p.regimes.clear(); }},
      {"technology_nonpositive", [](StationaryProblem& p) { p.regimes[0].A = 0.0; }},
      {"threshold_negative", [](StationaryProblem& p) { p.regimes[0].x = -0.5; }},
      {"technology_order", [](StationaryProblem& p) { p.regimes[1].A = 0.2; }},
      {"threshold_order", [](StationaryProblem& p) { p.regimes[1].x = 0.0; }},
      {"finiteness", [](StationaryProblem& p) { p.prefs.gamma = 0.5; }},
      {"cost_shape", [](StationaryProblem& p) { p.costs = SwitchingCostMatrix::uniform(3, 0.1); }},
      {"cost_negative",
       [](StationaryProblem& p) { p.costs = SwitchingCostMatrix({{0.0, -0.1}, {0.1, 0.0}}); }},
      {"diagonal_cost_nonzero",
       [](StationaryProblem& p) { p.costs = SwitchingCostMatrix({{0.0, 0.1}, {0.1, 0.2}}); }},
  };
  for (const auto& c : cases) {
    auto p = fixtures::benchmark();
    c.mutate(p);
    const auto rep = validate_problem(p);
    EXPECT_TRUE(rep.has(c.code)) << c.code;
  }
}

TEST(Validate, FinitenessFailsForLargeTechnologyBelowUnitGamma) {
  auto p = fixtures::benchmark();
  p.prefs.gamma = 0.5;
  // 0.04 + (0.3 - 0.05)(-0.5) < 0 while 0.04 + (0.2 - 0.05)(-0.5) < 0 as well.
  EXPECT_LT(p.finiteness_margin(2), 0.0);
  EXPECT_TRUE(validate_problem(p).has("finiteness"));
}

TEST(Drift, TotalDepreciationExamples) {
  auto p = fixtures::benchmark();
  p.depreciation = DepreciationBase::total;
  EXPECT_NEAR(drift(p, 1, 1.0, 0.1), 0.2 - 0.05 - 0.1, 1e-15);
  EXPECT_NEAR(drift(p, 2, 0.5, 0.0), -0.05 * 0.5, 1e-15);
  EXPECT_NEAR(drift(p, 2, 1.0, 0.0), -0.05 * 1.0, 1e-15);
}

TEST(Drift, ProductiveDepreciationExamples) {
  const auto p = fixtures::benchmark();
  EXPECT_NEAR(drift(p, 1, 1.0, 0.1), 0.05, 1e-15);
  EXPECT_EQ(drift(p, 2, 0.5, 0.0), 0.0);
  EXPECT_NEAR(drift(p, 2, 3.0, 0.1), 0.25 * 2.0 - 0.1, 1e-15);
}

TEST(Drift, PopulationGrowthDilutesCapital) {
  auto p = fixtures::benchmark();
  p.prefs.pi = 0.01;
  EXPECT_NEAR(drift(p, 1, 1.0, 0.0), 0.2 - 0.06, 1e-15);
  p.depreciation = DepreciationBase::total;
  EXPECT_NEAR(drift(p, 2, 0.5, 0.0), -0.06 * 0.5, 1e-15);
}

TEST(Drift, UnknownRegimeThrows) {
  const auto p = fixtures::benchmark();
  EXPECT_THROW(drift(p, 0, 1.0, 0.0), std::out_of_range);
  EXPECT_THROW(drift(p, 3, 1.0, 0.0), std::out_of_range);
}

TEST(Drift, LipschitzInCapital) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> k(0.0, 10.0), c(0.0, 2.0);
  for (auto base : {DepreciationBase::productive, DepreciationBase::total}) {
    auto p = fixtures::benchmark();
    p.prefs.pi = 0.01;
    p.depreciation = base;
    for (int n = 0; n < 2000; ++n) {
      const double a = k(rng), b = k(rng), cc = c(rng);
      for (RegimeId i = 1; i <= 2; ++i) {
        const double L = p.regime(i).A + p.prefs.delta + p.prefs.pi;
        EXPECT_LE(std::abs(drift(p, i, a, cc) - drift(p, i, b, cc)), L * std::abs(a - b) + 1e-14);
      }
    }
  }
}

TEST(Utility, Examples) {
  Preferences pr;
  pr.gamma = 2.0;
  EXPECT_DOUBLE_EQ(utility(pr, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(marginal_utility(pr, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(inverse_marginal_utility(pr, 4.0), 0.5);
  pr.gamma = 1.0;
  EXPECT_NEAR(utility(pr, std::exp(1.0)), 1.0, 1e-15);
}

TEST(Utility, RejectsNonpositive) {
  Preferences pr;
  EXPECT_THROW(utility(pr, 0.0), std::domain_error);
  EXPECT_THROW(marginal_utility(pr, -1.0), std::domain_error);
  EXPECT_THROW(inverse_marginal_utility(pr, 0.0), std::domain_error);
}

TEST(Utility, IncreasingConcaveAndInvertible) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> c(1e-3, 10.0), g(0.2, 5.0);
  for (int n = 0; n < 2000; ++n) {
    Preferences pr;
    pr.gamma = n % 10 == 0 ? 1.0 : g(rng);
    double a = c(rng), b = c(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-9) continue;
    EXPECT_LT(utility(pr, a), utility(pr, b));
    EXPECT_GT(utility(pr, 0.5 * (a + b)), 0.5 * (utility(pr, a) + utility(pr, b)));
    const double back = inverse_marginal_utility(pr, marginal_utility(pr, a));
    EXPECT_NEAR(back / a, 1.0, 1e-12);
  }
}

TEST(Utility, ProblemOverloadsForward) {
  const auto p = fixtures::benchmark();
  EXPECT_DOUBLE_EQ(utility(p, 2.0), utility(p.prefs, 2.0));
  EXPECT_DOUBLE_EQ(marginal_utility(p, 2.0), 0.25);
  EXPECT_DOUBLE_EQ(inverse_marginal_utility(p, 0.25), 2.0);
}

TEST(CostMatrix, Helpers) {
  const auto u = SwitchingCostMatrix::uniform(3, 0.2);
  EXPECT_EQ(u(1, 1), 0.0);
  EXPECT_EQ(u(1, 3), 0.2);
  EXPECT_FALSE(u.is_vanishing());
  const auto d = u.scaled(2.0);
  EXPECT_EQ(d(3, 2), 0.4);
  EXPECT_TRUE(SwitchingCostMatrix::vanishing(2).is_vanishing());
}
