#pragma once

// Monotone upwind finite-difference solver for the stationary HJB-QVI system
//
//   max{ sup_c [ mu_i(k,c) v_i'(k) + u(c) ] - (rho - pi) v_i(k),
//        max_{j != i} (v_j(k) - eta_ij) - v_i(k) } = 0,    i = 1..I,
//
// and for its vanishing-cost limit, where the switch moves inside the
// Hamiltonian. Each sweep solves the local nonlinear equation of every node
// exactly (Newton on a convex decreasing function), so the iteration is a
// Gauss-Seidel form of policy iteration. Sweep direction alternates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grid.hpp"
#include "problem.hpp"
#include "regions.hpp"

namespace estqvi {

enum class ConsumptionMode { closed_form, grid_search };

struct SolverConfig {
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  ConsumptionMode consumption_mode = ConsumptionMode::closed_form;
  std::size_t n_c = 400;
  double c_floor = 1e-10;
  double damping = 1.0;

  void validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("solver tol must be positive");
    if (max_iter == 0) throw std::invalid_argument("solver max_iter must be positive");
    if (consumption_mode == ConsumptionMode::grid_search && n_c < 2)
      throw std::invalid_argument("grid-search mode requires n_c >= 2");
    if (!(c_floor > 0.0)) throw std::invalid_argument("c_floor must be positive");
    if (!(damping > 0.0 && damping <= 1.0))
      throw std::invalid_argument("damping must lie in (0, 1]");
  }
};

struct HamiltonianValue {
  double value = 0.0;
  double consumption = 0.0;
  double drift = 0.0;
};

/// Largest admissible consumption at k: f_i(k) + (delta + pi) k_max + 1.
inline double consumption_cap(const StationaryProblem& p, RegimeId i, double k,
                              double k_max) {
  return p.regime(i).production(k) + p.prefs.effective_depreciation() * k_max + 1.0;
}

namespace detail {

/// argmax of u(c) - c s over [lo, hi] for CRRA u (concave objective). A
/// nonpositive slope gets the floor: such states are non-optimal transients.
inline double best_consumption(const Preferences& pr, double s, double lo, double hi) {
  if (!(s > 0.0)) return lo;
  return std::clamp(std::pow(s, -1.0 / pr.gamma), lo, hi);
}

inline double log_grid_point(double lo, double hi, std::size_t m, std::size_t n) {
  if (m + 1 == n) return hi;
  return lo * std::pow(hi / lo, static_cast<double>(m) / static_cast<double>(n - 1));
}

} // namespace detail

/// Upwind Hamiltonian: consumption below net output (nonnegative drift) pairs
/// with the forward slope, consumption above it with the backward slope. A
/// missing slope removes that branch (state constraint at the grid ends).
inline HamiltonianValue upwind_hamiltonian(const StationaryProblem& p, RegimeId i,
                                           double k, std::optional<double> forward,
                                           std::optional<double> backward,
                                           const SolverConfig& cfg, double c_cap) {
  const auto& pr = p.prefs;
  const double y = net_output(p, i, k);
  HamiltonianValue best{-std::numeric_limits<double>::infinity(), 0.0, 0.0};
  bool found = false;

  auto consider = [&](double c, double slope) {
    const double mu = y - c;
    const double val = utility(pr, c) + mu * slope;
    if (!found || val > best.value) {
      best = {val, c, mu};
      found = true;
    }
  };

  if (cfg.consumption_mode == ConsumptionMode::closed_form) {
    if (forward && y >= cfg.c_floor)
      consider(detail::best_consumption(pr, *forward, cfg.c_floor, y), *forward);
    if (backward) {
      const double lo = std::max(y, cfg.c_floor);
      consider(detail::best_consumption(pr, *backward, lo, std::max(c_cap, lo)),
               *backward);
    }
  } else {
    const double hi = std::max(c_cap, cfg.c_floor * 2.0);
    for (std::size_t m = 0; m < cfg.n_c; ++m) {
      const double c = detail::log_grid_point(cfg.c_floor, hi, m, cfg.n_c);
      if (y - c >= 0.0) {
        if (forward) consider(c, *forward);
      } else if (backward) {
        consider(c, *backward);
      }
    }
  }

  if (!found) {
    // No consumption keeps the state on the grid: hold at the floor.
    best = {utility(pr, cfg.c_floor), cfg.c_floor, 0.0};
  }
  return best;
}

/// sup_c [ mu_i(k, c) slope + u(c) ] and its maximizer.
inline HamiltonianValue hamiltonian(const StationaryProblem& p, RegimeId i, double k,
                                    double slope, const SolverConfig& cfg,
                                    double c_cap) {
  return upwind_hamiltonian(p, i, k, slope, slope, cfg, c_cap);
}

inline HamiltonianValue hamiltonian(const StationaryProblem& p, RegimeId i, double k,
                                    double slope, const SolverConfig& cfg = {}) {
  return hamiltonian(p, i, k, slope, cfg, consumption_cap(p, i, k, k));
}

struct ObstacleValue {
  ExtendedValue value;
  RegimeId target = 0;
};

/// max_{j != i} (v_j - eta_ij), smallest index on ties. `values` holds v_1..v_I.
inline ObstacleValue switch_obstacle(std::span<const double> values, RegimeId i,
                                     const SwitchingCostMatrix& costs) {
  ObstacleValue best{ExtendedValue::minus_infinity(), 0};
  for (RegimeId j = 1; j <= values.size(); ++j) {
    if (j == i) continue;
    const ExtendedValue cand(values[j - 1] - costs(i, j));
    if (cand > best.value) best = {cand, j};
  }
  return best;
}

struct SolverDiagnostics {
  std::size_t iterations = 0;
  bool converged = false;
  double final_change = 0.0;
  double max_hjb_residual = 0.0;        // continuation nodes, value units
  double max_obstacle_violation = 0.0;  // max(M v - v, 0)
  std::string scheme;
};

struct DiscretizedSolution {
  Grid grid;
  SwitchingCostMatrix costs;
  std::vector<std::vector<double>> value;          // [regime][node]
  std::vector<std::vector<double>> consumption;    // [regime][node]
  std::vector<std::vector<RegimeId>> switch_to;    // [regime][node], 0 = stay
  SolverDiagnostics diagnostics;
  bool vanishing = false;

  std::size_t regime_count() const { return value.size(); }

  std::vector<double> values_at(std::size_t node) const {
    std::vector<double> out(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) out[i] = value[i][node];
    return out;
  }

  /// Linear interpolation of v_i at k (clamped to the grid).
  double interpolate_value(RegimeId i, double k) const {
    return interpolate(value.at(i - 1), k);
  }
  double interpolate_consumption(RegimeId i, double k) const {
    return interpolate(consumption.at(i - 1), k);
  }

private:
  double interpolate(const std::vector<double>& f, double k) const {
    if (k <= grid.k_min()) return f.front();
    if (k >= grid.k_max()) return f.back();
    const std::size_t c = grid.cell(k);
    const double w = (k - grid.node(c)) / grid.spacing();
    return (1.0 - w) * f[c] + w * f[c + 1];
  }
};

struct VanishingSolution {
  Grid grid;
  std::vector<double> value;
  std::vector<RegimeId> active; // argmax regime per node, smallest index on ties
  std::vector<double> consumption;              // of the active regime
  std::vector<std::vector<double>> regime_consumption; // [regime][node], own maximizer
  SolverDiagnostics diagnostics;
};

namespace detail {

/// Node-local operator for one regime. Values are passed explicitly so the
/// same code serves the solve and the residual evaluation.
class NodeOperator {
public:
  NodeOperator(const StationaryProblem& p, const Grid& grid, const SolverConfig& cfg)
      : p_(p), grid_(grid), cfg_(cfg), rho_(p.prefs.effective_discount()),
        h_(grid.spacing()) {}

  struct Local {
    double value = 0.0;
    double consumption = 0.0;
  };

  /// Value to the right of node n as an affine function a v + b of v(n).
  struct RightValue {
    double a = 0.0;
    double b = 0.0;
  };

  /// Discrete HJB residual g(v) = H_up - rho v and its v-derivative.
  std::pair<HamiltonianValue, double> interior_residual(
      RegimeId i, std::size_t n, double v, std::span<const double> f,
      std::optional<RightValue> right = std::nullopt) const {
    const double k = grid_.node(n);
    std::optional<double> fwd, bwd;
    if (n + 1 < grid_.size()) {
      const double vr = right ? right->a * v + right->b : f[n + 1];
      fwd = (vr - v) / h_;
    }
    if (n > 0) bwd = (v - f[n - 1]) / h_;
    const auto hv = upwind_hamiltonian(p_, i, k, fwd, bwd, cfg_, cap(i, k));
    return {hv, hv.value - rho_ * v};
  }

  /// Root of the local equation at an interior or bottom node. g is convex
  /// and decreasing in v, so Newton converges from any starting point.
  Local solve_local(RegimeId i, std::size_t n, double guess, std::span<const double> f,
                    std::optional<RightValue> right = std::nullopt) const {
    const double right_slope = right ? (right->a - 1.0) / h_ : -1.0 / h_;
    double v = guess;
    HamiltonianValue hv;
    for (int it = 0; it < 200; ++it) {
      auto [h, g] = interior_residual(i, n, v, f, right);
      hv = h;
      const double dg =
          (h.drift > 0.0 ? h.drift * right_slope : h.drift / h_) - rho_;
      const double step = g / dg;
      v -= step;
      if (!std::isfinite(v)) break;
      if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(v))) break;
    }
    return {v, hv.consumption};
  }

  /// Far-field map at the last node: v_i taken homogeneous in (k - x_i)
  /// across the last cell, the exact profile of an AK regime that stays.
  /// Returns v(last) = a v(last - 1) + b.
  std::optional<RightValue> closure_map(RegimeId i) const {
    const std::size_t n = grid_.size() - 1;
    const double x = p_.regime(i).x;
    const double z1 = grid_.node(n) - x, z0 = grid_.node(n - 1) - x;
    if (!(z0 > 0.0)) return std::nullopt;
    if (p_.prefs.log_utility()) return RightValue{1.0, std::log(z1 / z0) / rho_};
    return RightValue{std::pow(z1 / z0, 1.0 - p_.prefs.gamma), 0.0};
  }

  std::optional<double> top_closure(RegimeId i, std::span<const double> f) const {
    const auto map = closure_map(i);
    if (!map) return std::nullopt;
    return map->a * f[grid_.size() - 2] + map->b;
  }

  /// Continuation value of regime i at node n given neighbours in f. When
  /// `closure_regime` is set, the second-to-last node sees the last node
  /// through that regime's far-field map instead of its stored value, which
  /// removes the slow two-node loop at the top of the grid.
  Local continuation(RegimeId i, std::size_t n, double guess, std::span<const double> f,
                     std::optional<RegimeId> closure_regime = std::nullopt) const {
    const std::size_t last = grid_.size() - 1;
    if (n == last) {
      if (auto v = top_closure(i, f)) {
        const double k = grid_.node(n);
        // Forward difference to a virtual node on the homogeneous profile,
        // matching the stencil the interior nodes use.
        const double z = k - p_.regime(i).x, ratio = (z + h_) / z;
        const double ahead = p_.prefs.log_utility()
                                 ? *v + std::log(ratio) / rho_
                                 : *v * std::pow(ratio, 1.0 - p_.prefs.gamma);
        const double slope = (ahead - *v) / h_;
        return {*v, hamiltonian(p_, i, k, slope, cfg_, cap(i, k)).consumption};
      }
    }
    if (n + 1 == last && closure_regime) {
      // Only a nonincreasing right slope keeps the local equation monotone.
      if (auto map = closure_map(*closure_regime); map && map->a <= 1.0)
        return solve_local(i, n, guess, f, map);
    }
    return solve_local(i, n, guess, f);
  }

  /// Continuation residual in value units: the move of v at node n that
  /// would satisfy the local equation (positive when v is too low).
  double residual(RegimeId i, std::size_t n, std::span<const double> f) const {
    if (n + 1 == grid_.size()) {
      if (auto v = top_closure(i, f)) return *v - f[n];
    }
    auto [h, g] = interior_residual(i, n, f[n], f);
    return g / (rho_ + std::abs(h.drift) / h_);
  }

private:
  double cap(RegimeId i, double k) const {
    return consumption_cap(p_, i, k, grid_.k_max());
  }

  const StationaryProblem& p_;
  const Grid& grid_;
  const SolverConfig& cfg_;
  double rho_;
  double h_;
};

/// Value of consuming half of net output forever in regime i: a feasible
/// stay policy, hence a subsolution, so the sweeps increase monotonically.
inline std::vector<double> initial_values(const StationaryProblem& p, RegimeId i,
                                          const Grid& grid, const SolverConfig& cfg) {
  std::vector<double> v(grid.size());
  const double rho = p.prefs.effective_discount();
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double c = std::max(0.5 * net_output(p, i, grid.node(m)), cfg.c_floor);
    v[m] = utility(p.prefs, c) / rho;
  }
  return v;
}

inline void require_valid(const StationaryProblem& p) {
  const auto report = validate_problem(p);
  if (!report.valid())
    throw PreconditionError("invalid problem: " + report.violations.front().message);
}

template <typename NodeUpdate>
void sweep(std::size_t n, bool right_to_left, NodeUpdate&& update) {
  if (right_to_left) {
    for (std::size_t m = n; m-- > 0;) update(m);
  } else {
    for (std::size_t m = 0; m < n; ++m) update(m);
  }
}

inline RegimeId dominant_regime(const StationaryProblem& p, double k) {
  RegimeId best = 1;
  for (RegimeId i = 2; i <= p.regime_count(); ++i)
    if (net_output(p, i, k) > net_output(p, best, k)) best = i;
  return best;
}

} // namespace detail

/// Solves the vanishing-cost HJB  -rho_eff v + max_i sup_c [mu_i v' + u] = 0.
inline VanishingSolution solve_vanishing(const StationaryProblem& p, const Grid& grid,
                                         const SolverConfig& cfg = {}) {
  detail::require_valid(p);
  cfg.validate();
  const std::size_t n = grid.size(), I = p.regime_count();
  detail::NodeOperator op(p, grid, cfg);

  VanishingSolution sol;
  sol.grid = grid;
  sol.value.assign(n, -std::numeric_limits<double>::infinity());
  for (RegimeId i = 1; i <= I; ++i) {
    const auto init = detail::initial_values(p, i, grid, cfg);
    for (std::size_t m = 0; m < n; ++m) sol.value[m] = std::max(sol.value[m], init[m]);
  }
  sol.active.assign(n, 1);
  sol.consumption.assign(n, cfg.c_floor);
  sol.regime_consumption.assign(I, std::vector<double>(n, cfg.c_floor));
  sol.diagnostics.scheme = "upwind-gauss-seidel-alternating/vanishing";
  // The far field belongs to the regime with the largest net output at k_max.
  const RegimeId top_regime = detail::dominant_regime(p, grid.k_max());

  auto node_update = [&](std::size_t m, bool commit) {
    double best = -std::numeric_limits<double>::infinity();
    RegimeId arg = 1;
    double c = cfg.c_floor;
    for (RegimeId i = 1; i <= I; ++i) {
      const auto loc = op.continuation(i, m, sol.value[m], sol.value, top_regime);
      if (!commit) sol.regime_consumption[i - 1][m] = loc.consumption;
      if (m + 1 == n && i != top_regime && op.top_closure(top_regime, sol.value))
        continue;
      if (loc.value > best) {
        best = loc.value;
        arg = i;
        c = loc.consumption;
      }
    }
    const double change = cfg.damping * (best - sol.value[m]);
    if (commit) sol.value[m] += change;
    sol.active[m] = arg;
    sol.consumption[m] = c;
    return std::abs(change);
  };

  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    double change = 0.0;
    detail::sweep(n, it % 2 == 1,
                  [&](std::size_t m) { change = std::max(change, node_update(m, true)); });
    sol.diagnostics.iterations = it;
    sol.diagnostics.final_change = change;
    if (!std::isfinite(change)) break;
    if (change < cfg.tol) {
      sol.diagnostics.converged = true;
      break;
    }
  }
  // Policies consistent with the final values.
  for (std::size_t m = 0; m < n; ++m) node_update(m, false);
  return sol;
}

/// Expands a vanishing solution to per-regime form (all v_i equal, regime i
/// switching to the active regime wherever it is not active itself). c_i is
/// regime i's own maximizer, so interpolation never blends two regimes.
inline DiscretizedSolution to_discretized(const VanishingSolution& v, std::size_t regimes) {
  DiscretizedSolution out;
  out.grid = v.grid;
  out.costs = SwitchingCostMatrix::vanishing(regimes);
  out.value.assign(regimes, v.value);
  out.consumption = v.regime_consumption;
  out.switch_to.assign(regimes, std::vector<RegimeId>(v.grid.size(), 0));
  for (RegimeId i = 1; i <= regimes; ++i)
    for (std::size_t m = 0; m < v.grid.size(); ++m)
      if (v.active[m] != i) out.switch_to[i - 1][m] = v.active[m];
  out.diagnostics = v.diagnostics;
  out.vanishing = true;
  return out;
}

struct ResidualNode {
  RegimeId regime = 0;
  std::size_t node = 0;
  double hjb = 0.0;
  double obstacle = 0.0;
};

struct QviResidualReport {
  double max_abs_residual = 0.0;        // max over nodes of |max(hjb, obstacle)|
  double max_hjb_continuation = 0.0;    // |hjb| on stay nodes
  double max_obstacle_violation = 0.0;  // max(obstacle, 0)
  std::vector<ResidualNode> flagged;    // |max(hjb, obstacle)| > threshold
};

/// Evaluates both branches of the QVI at every node. The HJB branch is in
/// value units (see NodeOperator::residual); the obstacle branch is
/// max_{j != i}(v_j - eta_ij) - v_i.
inline QviResidualReport qvi_residual(const DiscretizedSolution& sol,
                                      const StationaryProblem& p,
                                      const SolverConfig& cfg, double threshold) {
  detail::NodeOperator op(p, sol.grid, cfg);
  QviResidualReport rep;
  const std::size_t n = sol.grid.size();
  for (RegimeId i = 1; i <= sol.regime_count(); ++i) {
    const auto& f = sol.value[i - 1];
    for (std::size_t m = 0; m < n; ++m) {
      const double hjb = op.residual(i, m, f);
      const auto vals = sol.values_at(m);
      const auto obs = switch_obstacle(vals, i, sol.costs);
      const double obstacle = obs.value.is_finite()
                                  ? obs.value.value() - f[m]
                                  : -std::numeric_limits<double>::infinity();
      const double combined = std::max(hjb, obstacle);
      rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(combined));
      if (sol.switch_to[i - 1][m] == 0)
        rep.max_hjb_continuation = std::max(rep.max_hjb_continuation, std::abs(hjb));
      rep.max_obstacle_violation = std::max(rep.max_obstacle_violation, obstacle);
      if (!(std::abs(combined) <= threshold)) rep.flagged.push_back({i, m, hjb, obstacle});
    }
  }
  return rep;
}

inline QviResidualReport qvi_residual(const DiscretizedSolution& sol,
                                      const StationaryProblem& p,
                                      const SolverConfig& cfg = {}) {
  return qvi_residual(sol, p, cfg, 10.0 * cfg.tol);
}

/// Solves the HJB-QVI with strictly positive switching costs. Vanishing
/// costs are delegated to solve_vanishing.
inline DiscretizedSolution solve_qvi(const StationaryProblem& p, const Grid& grid,
                                     const SolverConfig& cfg = {}) {
  detail::require_valid(p);
  cfg.validate();
  const std::size_t I = p.regime_count();
  if (p.costs.is_vanishing()) {
    auto sol = to_discretized(solve_vanishing(p, grid, cfg), I);
    const auto res = qvi_residual(sol, p, cfg);
    sol.diagnostics.max_hjb_residual = res.max_hjb_continuation;
    sol.diagnostics.max_obstacle_violation = res.max_obstacle_violation;
    return sol;
  }

  const std::size_t n = grid.size();
  detail::NodeOperator op(p, grid, cfg);
  DiscretizedSolution sol;
  sol.grid = grid;
  sol.costs = p.costs;
  sol.diagnostics.scheme = "upwind-gauss-seidel-alternating/qvi";
  for (RegimeId i = 1; i <= I; ++i)
    sol.value.push_back(detail::initial_values(p, i, grid, cfg));
  sol.consumption.assign(I, std::vector<double>(n, cfg.c_floor));
  sol.switch_to.assign(I, std::vector<RegimeId>(n, 0));

  std::vector<double> cont(I), cont_c(I), w(I);
  auto node_update = [&](std::size_t m, bool commit) {
    for (RegimeId i = 1; i <= I; ++i) {
      std::optional<RegimeId> closure;
      if (sol.switch_to[i - 1][n - 1] == 0) closure = i;
      const auto loc =
          op.continuation(i, m, sol.value[i - 1][m], sol.value[i - 1], closure);
      cont[i - 1] = loc.value;
      cont_c[i - 1] = loc.consumption;
    }
    // Node-local fixed point of v_i = max(cont_i, max_j (v_j - eta_ij)).
    w = cont;
    for (std::size_t pass = 0; pass < I; ++pass) {
      bool changed = false;
      for (RegimeId i = 1; i <= I; ++i) {
        const auto obs = switch_obstacle(w, i, p.costs);
        if (obs.value > ExtendedValue(w[i - 1])) {
          w[i - 1] = obs.value.value();
          changed = true;
        }
      }
      if (!changed) break;
    }
    double change = 0.0;
    for (RegimeId i = 1; i <= I; ++i) {
      const auto obs = switch_obstacle(w, i, p.costs);
      // Ties within tol count as switching (the transformation set is closed).
      const bool sw = obs.value.is_finite() && obs.value.value() >= cont[i - 1] - cfg.tol;
      sol.switch_to[i - 1][m] = sw ? obs.target : 0;
      sol.consumption[i - 1][m] = cont_c[i - 1];
      const double delta = cfg.damping * (w[i - 1] - sol.value[i - 1][m]);
      if (commit) sol.value[i - 1][m] += delta;
      change = std::max(change, std::abs(delta));
    }
    return change;
  };

  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    double change = 0.0;
    detail::sweep(n, it % 2 == 1,
                  [&](std::size_t m) { change = std::max(change, node_update(m, true)); });
    sol.diagnostics.iterations = it;
    sol.diagnostics.final_change = change;
    if (!std::isfinite(change)) break;
    if (change < cfg.tol) {
      sol.diagnostics.converged = true;
      break;
    }
  }
  for (std::size_t m = 0; m < n; ++m) node_update(m, false);

  const auto res = qvi_residual(sol, p, cfg);
  sol.diagnostics.max_hjb_residual = res.max_hjb_continuation;
  sol.diagnostics.max_obstacle_violation = res.max_obstacle_violation;
  return sol;
}

/// Maximal runs of equal switch policy per regime. Interval endpoints are
/// grid nodes; the run reaching the last node is reported as unbounded.
inline RegionReport extract_regions(const DiscretizedSolution& sol) {
  RegionReport rep;
  const auto& grid = sol.grid;
  const std::size_t n = grid.size();
  const double inf = std::numeric_limits<double>::infinity();
  for (RegimeId i = 1; i <= sol.regime_count(); ++i) {
    RegimeRegions rr;
    rr.regime = i;
    const auto& pol = sol.switch_to[i - 1];
    std::size_t start = 0;
    for (std::size_t m = 1; m <= n; ++m) {
      if (m < n && pol[m] == pol[start]) continue;
      const double lo = grid.node(start);
      const double hi = m < n ? grid.node(m) : inf;
      if (pol[start] == 0)
        rr.continuation.push_back({lo, hi});
      else
        rr.switch_pieces.push_back({{lo, hi}, pol[start], start, m - 1});
      start = m;
    }
    rep.regimes.push_back(std::move(rr));
  }
  return rep;
}

/// H_i^{j,l}(k) = [v_j(k) - eta_ij] - [v_l(k) - eta_il] at the node nearest k.
inline double comparative_advantage(const DiscretizedSolution& sol, RegimeId i,
                                    RegimeId j, RegimeId l, double k) {
  const std::size_t I = sol.regime_count();
  if (i < 1 || i > I || j < 1 || j > I || l < 1 || l > I)
    throw std::out_of_range("regime index out of range");
  const std::size_t m = sol.grid.nearest(k);
  return (sol.value[j - 1][m] - sol.costs(i, j)) - (sol.value[l - 1][m] - sol.costs(i, l));
}

/// C such that |v_i(k)| <= C (1 + k) on the grid, from the secant line
/// through the two largest nodes of each regime.
inline double linear_growth_constant(const DiscretizedSolution& sol) {
  const std::size_t n = sol.grid.size();
  const double k1 = sol.grid.node(n - 2), k2 = sol.grid.node(n - 1);
  double c = 0.0;
  for (const auto& f : sol.value) {
    const double slope = (f[n - 1] - f[n - 2]) / (k2 - k1);
    const double intercept = f[n - 1] - slope * k2;
    c = std::max({c, std::abs(slope), std::abs(intercept)});
  }
  return c;
}

} // namespace estqvi
