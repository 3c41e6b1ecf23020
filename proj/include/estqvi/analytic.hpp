#pragma once

// Closed-form results for the AK economy with CRRA utility (gamma > 1) and
// vanishing switching costs: stay values Q_i (k - x_i)^{1-gamma}, the
// value-matching thresholds k_ij, regions of transformation for two and
// three regimes, and the phase structure of the equilibrium path.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "problem.hpp"
#include "regions.hpp"

namespace estqvi::analytic {

/// Throws PreconditionError unless the closed forms apply to regime i.
inline void require_closed_form(const StationaryProblem& p, RegimeId i) {
  if (!(p.prefs.gamma > 1.0))
    throw PreconditionError("closed forms require gamma > 1");
  const auto& r = p.regime(i);
  if (p.depreciation == DepreciationBase::total && r.x != 0.0)
    throw PreconditionError(
        "closed forms require depreciation on productive capital when x_i > 0");
  if (!(p.finiteness_margin(i) > 0.0))
    throw PreconditionError("finiteness condition violated for regime " +
                            std::to_string(i));
}

inline void require_closed_form(const StationaryProblem& p) {
  for (RegimeId i = 1; i <= p.regime_count(); ++i) require_closed_form(p, i);
}

/// Consumption per unit of productive capital, (rho + (A_i - delta)(gamma-1))/gamma.
inline double mpc(const StationaryProblem& p, RegimeId i) {
  require_closed_form(p, i);
  return p.finiteness_margin(i) / p.prefs.gamma;
}

/// Growth rate of productive capital (A_i - rho - delta)/gamma.
inline double growth_rate(const StationaryProblem& p, RegimeId i) {
  return p.growth_margin(i) / p.prefs.gamma;
}

inline double q_coefficient(const StationaryProblem& p, RegimeId i) {
  require_closed_form(p, i);
  const double g = p.prefs.gamma;
  return std::pow(g, g) / (1.0 - g) * std::pow(p.finiteness_margin(i), -g);
}

/// Value of staying in regime i forever. Minus infinity at or below x_i.
inline ExtendedValue stay_value(const StationaryProblem& p, RegimeId i, double k) {
  const double q = q_coefficient(p, i);
  const double z = k - p.regime(i).x;
  if (!(z > 0.0)) return ExtendedValue::minus_infinity();
  return ExtendedValue(q * std::pow(z, 1.0 - p.prefs.gamma));
}

inline double stay_consumption(const StationaryProblem& p, RegimeId i, double k) {
  const double z = k - p.regime(i).x;
  if (!(z > 0.0))
    throw PreconditionError("stay consumption requires k > x_i");
  return mpc(p, i) * z;
}

inline double stay_capital_path(const StationaryProblem& p, RegimeId i,
                                double k0, double t) {
  require_closed_form(p, i);
  const double x = p.regime(i).x;
  if (!(k0 > x)) throw PreconditionError("capital path requires k0 > x_i");
  if (!(t >= 0.0)) throw PreconditionError("capital path requires t >= 0");
  return x + (k0 - x) * std::exp(growth_rate(p, i) * t);
}

/// a_ij from the technology bracket; the form used for reporting.
inline double a_ratio(const StationaryProblem& p, RegimeId i, RegimeId j) {
  if (i == j) throw PreconditionError("a_ij requires i != j");
  require_closed_form(p, i);
  require_closed_form(p, j);
  const RegimeId lo = std::min(i, j), hi = std::max(i, j);
  const double g = p.prefs.gamma;
  const double ratio =
      1.0 + (p.regime(hi).A - p.regime(lo).A) * (g - 1.0) / p.finiteness_margin(lo);
  const double a = std::pow(ratio, g / (g - 1.0));
  return i < j ? a : 1.0 / a;
}

/// a_ij = (Q_j / Q_i)^{1/(1-gamma)}.
inline double a_ratio_from_q(const StationaryProblem& p, RegimeId i, RegimeId j) {
  if (i == j) throw PreconditionError("a_ij requires i != j");
  return std::pow(q_coefficient(p, j) / q_coefficient(p, i),
                  1.0 / (1.0 - p.prefs.gamma));
}

/// Capital level where the stay values of i and j coincide.
inline double k_threshold(const StationaryProblem& p, RegimeId i, RegimeId j) {
  if (i == j) throw PreconditionError("k_ij requires i != j");
  const RegimeId lo = std::min(i, j), hi = std::max(i, j);
  const double xl = p.regime(lo).x, xh = p.regime(hi).x;
  return xh + (xh - xl) / (a_ratio(p, lo, hi) - 1.0);
}

/// First time the stay path of regime i started at k0 reaches k_target.
inline double switch_time(const StationaryProblem& p, RegimeId i, double k0,
                          double k_target) {
  require_closed_form(p, i);
  const double x = p.regime(i).x;
  if (!(k0 > x) || !(k_target > x))
    throw PreconditionError("switch time requires k0 > x_i and target > x_i");
  if (k0 == k_target) return 0.0;
  const double g = growth_rate(p, i);
  const double ratio = std::log((k_target - x) / (k0 - x));
  if (g == 0.0 || ratio / g < 0.0)
    throw PreconditionError("target capital is unreachable from k0");
  return ratio / g;
}

/// Growth rate of consumption on a stay path; constant in k.
inline double euler_growth_rate(const StationaryProblem& p, RegimeId i) {
  return growth_rate(p, i);
}

struct AkClosedForm {
  std::vector<double> Q;
  std::vector<std::vector<double>> a;    // a[i][j], diagonal 1
  std::vector<std::vector<double>> kthr; // kthr[i][j], diagonal NaN
  std::vector<double> g;
  std::vector<double> mpc;
};

inline AkClosedForm closed_form(const StationaryProblem& p) {
  require_closed_form(p);
  const std::size_t n = p.regime_count();
  AkClosedForm out;
  out.a.assign(n, std::vector<double>(n, 1.0));
  out.kthr.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  for (RegimeId i = 1; i <= n; ++i) {
    out.Q.push_back(q_coefficient(p, i));
    out.g.push_back(growth_rate(p, i));
    out.mpc.push_back(mpc(p, i));
    for (RegimeId j = 1; j <= n; ++j) {
      if (i == j) continue;
      out.a[i - 1][j - 1] = a_ratio(p, i, j);
      out.kthr[i - 1][j - 1] = k_threshold(p, i, j);
    }
  }
  return out;
}

/// Value function of a region-based solution: on each piece, the stay value
/// of the named regime.
struct PiecewiseValue {
  struct Piece {
    Interval interval;
    RegimeId regime = 0;
  };
  std::vector<Piece> pieces;

  RegimeId regime_at(double k) const {
    for (const auto& piece : pieces)
      if (piece.interval.contains(k)) return piece.regime;
    return 0;
  }
};

struct AnalyticSolution {
  StationaryProblem problem;
  PiecewiseValue value; // common value v_1 = ... = v_I
  RegionReport regions;
  std::vector<double> kinks; // x_i and k_ij where the value loses smoothness

  ExtendedValue operator()(double k) const {
    const RegimeId r = value.regime_at(k);
    if (r == 0) return ExtendedValue::minus_infinity();
    return stay_value(problem, r, k);
  }
};

namespace detail {

inline void require_vanishing(const StationaryProblem& p, std::size_t regimes) {
  if (p.regime_count() != regimes)
    throw PreconditionError("expected I = " + std::to_string(regimes));
  if (!p.costs.is_vanishing())
    throw PreconditionError("closed-form regions require vanishing switching costs");
  const auto report = validate_problem(p);
  if (!report.valid())
    throw PreconditionError("invalid problem: " + report.violations.front().message);
  require_closed_form(p);
}

/// Appends [lo, hi) to a sorted list, merging with an adjacent predecessor.
inline void append_interval(std::vector<Interval>& out, double lo, double hi) {
  if (!(hi > lo)) return;
  if (!out.empty() && out.back().hi == lo) {
    out.back().hi = hi;
    return;
  }
  out.push_back({lo, hi});
}

inline void append_piece(std::vector<SwitchPiece>& out, double lo, double hi,
                         RegimeId target) {
  if (!(hi > lo)) return;
  if (!out.empty() && out.back().interval.hi == lo && out.back().target == target) {
    out.back().interval.hi = hi;
    return;
  }
  out.push_back({{lo, hi}, target, std::nullopt, std::nullopt});
}

/// Regions for regime i where the target at each k is the regime with the
/// highest stay value (smallest index on ties; staying wins ties).
inline RegimeRegions best_stay_regions(const StationaryProblem& p, RegimeId i,
                                       const std::vector<double>& breaks) {
  RegimeRegions rr;
  rr.regime = i;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < breaks.size(); ++b) {
    const double lo = breaks[b];
    const double hi = b + 1 < breaks.size() ? breaks[b + 1] : inf;
    const double mid = std::isinf(hi) ? lo + 1.0 + std::abs(lo) : 0.5 * (lo + hi);
    RegimeId best = i;
    ExtendedValue best_v = stay_value(p, i, mid);
    for (RegimeId j = 1; j <= p.regime_count(); ++j) {
      const auto vj = stay_value(p, j, mid);
      if (vj > best_v) {
        best = j;
        best_v = vj;
      }
    }
    if (best == i)
      append_interval(rr.continuation, lo, hi);
    else
      append_piece(rr.switch_pieces, lo, hi, best);
  }
  return rr;
}

inline std::vector<double> breakpoints(const StationaryProblem& p) {
  std::set<double> s{0.0};
  for (const auto& r : p.regimes) s.insert(r.x);
  for (RegimeId i = 1; i <= p.regime_count(); ++i)
    for (RegimeId j = i + 1; j <= p.regime_count(); ++j)
      s.insert(k_threshold(p, i, j));
  return {s.begin(), s.end()};
}

inline std::vector<double> kinks(const StationaryProblem& p,
                                 const std::vector<double>& thresholds) {
  std::set<double> s(thresholds.begin(), thresholds.end());
  for (const auto& r : p.regimes)
    if (r.x > 0.0) s.insert(r.x);
  return {s.begin(), s.end()};
}

} // namespace detail

/// Two regimes, vanishing costs: S_12 = [k_12, inf), v = v~_1 below k_12 and
/// v~_2 above. Starting in regime 2 below k_12 the economy switches down.
inline AnalyticSolution two_regime_solution(const StationaryProblem& p) {
  detail::require_vanishing(p, 2);
  const double inf = std::numeric_limits<double>::infinity();
  const double k12 = k_threshold(p, 1, 2);

  AnalyticSolution sol;
  sol.problem = p;
  sol.value.pieces = {{{0.0, k12}, 1}, {{k12, inf}, 2}};

  RegimeRegions r1{1, {{{k12, inf}, 2, std::nullopt, std::nullopt}}, {{0.0, k12}}};
  RegimeRegions r2{2, {{{0.0, k12}, 1, std::nullopt, std::nullopt}}, {{k12, inf}}};
  sol.regions.regimes = {r1, r2};
  sol.kinks = detail::kinks(p, {k12});
  return sol;
}

/// Three regimes, vanishing costs, under k_12 < min(k_13, k_23):
/// S_12 = [k_12, min(k_13, k_23)), S_13 = [max(k_13, k_23), inf). Regimes 2
/// and 3 switch to the regime with the highest stay value.
inline AnalyticSolution three_regime_regions(const StationaryProblem& p) {
  detail::require_vanishing(p, 3);
  const double inf = std::numeric_limits<double>::infinity();
  const double k12 = k_threshold(p, 1, 2);
  const double k13 = k_threshold(p, 1, 3);
  const double k23 = k_threshold(p, 2, 3);
  const double lo3 = std::min(k13, k23), hi3 = std::max(k13, k23);
  if (!(k12 < lo3))
    throw PreconditionError(
        "proposition precondition failed: k_12 < min(k_13, k_23) does not hold");

  AnalyticSolution sol;
  sol.problem = p;
  sol.value.pieces = {
      {{0.0, k12}, 1}, {{k12, lo3}, 2}, {{lo3, hi3}, 1}, {{hi3, inf}, 3}};
  // Degenerate hi3 == lo3 leaves an empty middle piece.
  std::erase_if(sol.value.pieces,
                [](const auto& piece) { return !(piece.interval.hi > piece.interval.lo); });

  RegimeRegions r1;
  r1.regime = 1;
  detail::append_piece(r1.switch_pieces, k12, lo3, 2);
  detail::append_piece(r1.switch_pieces, hi3, inf, 3);
  detail::append_interval(r1.continuation, 0.0, k12);
  detail::append_interval(r1.continuation, lo3, hi3);

  const auto breaks = detail::breakpoints(p);
  sol.regions.regimes = {r1, detail::best_stay_regions(p, 2, breaks),
                         detail::best_stay_regions(p, 3, breaks)};
  sol.kinks = detail::kinks(p, {k12, k13, k23});
  return sol;
}

/// Dispatches on the number of regimes (2 or 3).
inline AnalyticSolution solve(const StationaryProblem& p) {
  if (p.regime_count() == 2) return two_regime_solution(p);
  if (p.regime_count() == 3) return three_regime_regions(p);
  throw PreconditionError("closed-form regions are available for I = 2 or 3 only");
}

/// One constant-regime segment of the equilibrium path. Prices are the
/// rental rate R = A_regime and the wage w = 0.
struct Phase {
  RegimeId regime = 0;
  double t_begin = 0.0;
  double t_end = std::numeric_limits<double>::infinity();
  double k_begin = 0.0;
  double x = 0.0;
  double growth = 0.0;
  double mpc = 0.0;
  double rental_rate = 0.0;
  double wage = 0.0;

  double capital(double t) const {
    return x + (k_begin - x) * std::exp(growth * (t - t_begin));
  }
  double consumption(double t) const { return mpc * (capital(t) - x); }
};

/// Phases of the optimal path for two regimes, started in regime i0 at k0.
inline std::vector<Phase> equilibrium_path(const StationaryProblem& p, RegimeId i0,
                                           double k0) {
  const auto sol = two_regime_solution(p);
  if (i0 != 1 && i0 != 2) throw PreconditionError("starting regime must be 1 or 2");
  const double k12 = k_threshold(p, 1, 2);

  auto make_phase = [&](RegimeId r, double t0, double kb) {
    Phase ph;
    ph.regime = r;
    ph.t_begin = t0;
    ph.k_begin = kb;
    ph.x = p.regime(r).x;
    ph.growth = growth_rate(p, r);
    ph.mpc = mpc(p, r);
    ph.rental_rate = p.regime(r).A;
    ph.wage = 0.0;
    return ph;
  };

  if (k0 >= k12) return {make_phase(2, 0.0, k0)};
  if (!(k0 > p.regime(1).x))
    throw PreconditionError("equilibrium path requires k0 > x_1");
  // Below k_12 the economy runs regime 1 (switching down at once from 2).
  std::vector<Phase> phases{make_phase(1, 0.0, k0)};
  if (growth_rate(p, 1) <= 0.0) return phases;
  const double t12 = switch_time(p, 1, k0, k12);
  phases.front().t_end = t12;
  phases.push_back(make_phase(2, t12, phases.front().capital(t12)));
  return phases;
}

} // namespace estqvi::analytic
