#pragma once

// Forward simulation of the controlled economy: fixed-step RK4 within a
// regime, bisection localization of regime switches.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "problem.hpp"
#include "regions.hpp"
#include "solver.hpp"

namespace estqvi {

/// A feedback policy: consumption and switch target (0 = stay) as functions
/// of the current regime and capital, plus the value it attains.
template <typename P>
concept Policy = requires(const P& pol, RegimeId i, double k) {
  { pol.consumption(i, k) } -> std::convertible_to<double>;
  { pol.switch_target(i, k) } -> std::convertible_to<RegimeId>;
  { pol.domain_max() } -> std::convertible_to<double>;
};

template <typename P>
concept ValuedPolicy = Policy<P> && requires(const P& pol, RegimeId i, double k) {
  { pol.value(i, k) } -> std::convertible_to<double>;
};

/// Closed-form AK policy: c = mpc_i (k - x_i), switches on the analytic
/// transformation regions.
class AnalyticPolicy {
public:
  explicit AnalyticPolicy(const StationaryProblem& p)
      : p_(p), sol_(analytic::solve(p)) {}

  /// Zero at or below x_i, where the regime produces nothing.
  double consumption(RegimeId i, double k) const {
    return k > p_.regime(i).x ? analytic::stay_consumption(p_, i, k) : 0.0;
  }
  RegimeId switch_target(RegimeId i, double k) const {
    return sol_.regions.switch_target(i, k);
  }
  double value(RegimeId, double k) const { return sol_(k).value(); }
  double domain_max() const { return std::numeric_limits<double>::infinity(); }

  const analytic::AnalyticSolution& solution() const { return sol_; }

private:
  const StationaryProblem& p_;
  analytic::AnalyticSolution sol_;
};

/// Policy read off a grid solution: linearly interpolated consumption,
/// switch target at the nearest node.
class NumericPolicy {
public:
  explicit NumericPolicy(const DiscretizedSolution& sol) : sol_(sol) {}

  double consumption(RegimeId i, double k) const {
    return sol_.interpolate_consumption(i, k);
  }
  RegimeId switch_target(RegimeId i, double k) const {
    return sol_.switch_to.at(i - 1)[sol_.grid.nearest(k)];
  }
  double value(RegimeId i, double k) const { return sol_.interpolate_value(i, k); }
  double domain_max() const { return sol_.grid.k_max(); }

private:
  const DiscretizedSolution& sol_;
};

/// Constant consumption, never switches.
struct ConstantPolicy {
  double c = 0.0;

  double consumption(RegimeId, double) const { return c; }
  RegimeId switch_target(RegimeId, double) const { return 0; }
  double domain_max() const { return std::numeric_limits<double>::infinity(); }
};

enum class TailHandling { automatic, analytic_tail, truncate };

struct SimConfig {
  double dt = 1e-3;
  double t_max = 200.0;
  double event_tol = 1e-12;
  TailHandling tail_handling = TailHandling::automatic;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("sim dt must be positive");
    if (!(t_max > 0.0)) throw std::invalid_argument("sim t_max must be positive");
    if (!(event_tol > 0.0)) throw std::invalid_argument("sim event_tol must be positive");
  }
};

struct Sample {
  double t = 0.0;
  double k = 0.0;
  double c = 0.0;
  RegimeId regime = 0;
  double u_inst = 0.0;
  double U_cum = 0.0;
};

struct SwitchEvent {
  double t = 0.0;
  RegimeId from = 0;
  RegimeId to = 0;
  double k = 0.0;
  double cost = 0.0;            // eta_{from,to}
  double discounted_cost = 0.0; // e^{-rho_eff t} eta
  double c_before = 0.0;
  double c_after = 0.0;
  std::size_t sample = 0;       // index of the sample at the event time
};

struct Truncation {
  double t = 0.0;
  double k = 0.0;
  std::string reason;
};

struct Trajectory {
  RegimeId initial_regime = 0;
  double k0 = 0.0;
  double dt = 0.0;
  double t_max = 0.0;
  TailHandling tail_handling = TailHandling::automatic;
  std::vector<Sample> samples;
  std::vector<SwitchEvent> events;
  std::optional<Truncation> truncation;

  /// Event recorded at sample m, if any.
  const SwitchEvent* event_at(std::size_t m) const {
    for (const auto& e : events)
      if (e.sample == m) return &e;
    return nullptr;
  }
};

namespace detail {

inline double discount(const StationaryProblem& p, double t) {
  return std::exp(-p.prefs.effective_discount() * t);
}

/// Integrand e^{-rho t} u(c) at the left end of segment [m, m+1].
inline double integrand_right(const StationaryProblem& p, const Sample& s) {
  return discount(p, s.t) * s.u_inst;
}

/// Integrand at the right end of segment [m-1, m]: the pre-switch
/// consumption when sample m is a switch event.
inline double integrand_left(const StationaryProblem& p, const Trajectory& tr,
                             std::size_t m) {
  const auto& s = tr.samples[m];
  if (const auto* e = tr.event_at(m)) return discount(p, s.t) * utility(p.prefs, e->c_before);
  return discount(p, s.t) * s.u_inst;
}

template <Policy P>
double rk4_step(const StationaryProblem& p, const P& pol, RegimeId i, double k, double h) {
  auto f = [&](double y) { return drift(p, i, y, pol.consumption(i, y)); };
  const double k1 = f(k);
  const double k2 = f(k + 0.5 * h * k1);
  const double k3 = f(k + 0.5 * h * k2);
  const double k4 = f(k + h * k3);
  return k + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace detail

/// Integrates k' = drift(i, k, c_i(k)) from (i0, k0) up to cfg.t_max.
template <Policy P>
Trajectory simulate(const StationaryProblem& p, const P& pol, RegimeId i0, double k0,
                    const SimConfig& cfg = {}) {
  cfg.validate();
  if (!(k0 > 0.0)) throw PreconditionError("simulate requires k0 > 0");
  p.regime(i0);
  const double k_max = pol.domain_max();
  if (k0 > k_max) throw PreconditionError("k0 lies above the policy domain");

  Trajectory tr;
  tr.initial_regime = i0;
  tr.k0 = k0;
  tr.dt = cfg.dt;
  tr.t_max = cfg.t_max;
  tr.tail_handling = cfg.tail_handling;

  RegimeId i = i0;
  double t = 0.0, k = k0, U = 0.0;

  // Appends a sample with the current regime; returns false when the
  // policy's consumption is not positive.
  auto push = [&](double c) {
    if (!(c > 0.0)) {
      tr.truncation = Truncation{t, k, "nonpositive consumption"};
      return false;
    }
    Sample s{t, k, c, i, utility(p.prefs, c), 0.0};
    if (!tr.samples.empty()) {
      const auto& prev = tr.samples.back();
      const double right = detail::discount(p, t) *
                           (tr.events.empty() || tr.events.back().sample != tr.samples.size()
                                ? s.u_inst
                                : utility(p.prefs, tr.events.back().c_before));
      U += 0.5 * (t - prev.t) * (detail::integrand_right(p, prev) + right);
    }
    if (!tr.events.empty() && tr.events.back().sample == tr.samples.size())
      U -= tr.events.back().discounted_cost;
    s.U_cum = U;
    tr.samples.push_back(s);
    return true;
  };

  auto switch_now = [&](RegimeId target) {
    SwitchEvent e;
    e.t = t;
    e.from = i;
    e.to = target;
    e.k = k;
    e.cost = p.costs(i, target);
    e.discounted_cost = detail::discount(p, t) * e.cost;
    e.c_before = pol.consumption(i, k);
    e.c_after = pol.consumption(target, k);
    e.sample = tr.samples.size();
    tr.events.push_back(e);
    i = target;
  };

  // An immediate switch is allowed at t = 0 only.
  if (const RegimeId j = pol.switch_target(i, k); j != 0) switch_now(j);
  if (!push(pol.consumption(i, k))) return tr;

  const double t_eps = 1e-12 * std::max(1.0, cfg.t_max);
  while (t < cfg.t_max - t_eps) {
    const double h = std::min(cfg.dt, cfg.t_max - t);
    double k_new = detail::rk4_step(p, pol, i, k, h);
    if (!(k_new > 0.0) || k_new > k_max || !std::isfinite(k_new)) {
      tr.truncation = Truncation{t + h, k_new, k_new > k_max ? "capital above grid"
                                                             : "capital left domain"};
      break;
    }
    const RegimeId j = pol.switch_target(i, k_new);
    if (j == 0) {
      t += h;
      k = k_new;
      if (!push(pol.consumption(i, k))) break;
      continue;
    }
    // Smallest step length at which the switch set is entered.
    double lo = 0.0, hi = h;
    while (hi - lo > cfg.event_tol) {
      const double mid = 0.5 * (lo + hi);
      if (pol.switch_target(i, detail::rk4_step(p, pol, i, k, mid)) != 0)
        hi = mid;
      else
        lo = mid;
    }
    k = detail::rk4_step(p, pol, i, k, hi);
    t += hi;
    switch_now(pol.switch_target(i, k) != 0 ? pol.switch_target(i, k) : j);
    if (!push(pol.consumption(i, k))) break;
  }
  return tr;
}

struct UtilityReport {
  double integral = 0.0;     // trapezoid of e^{-rho t} u(c)
  double costs = 0.0;        // sum of discounted switching costs
  double tail = 0.0;         // analytic tail, 0 when truncated
  double tail_bound = 0.0;   // |tail| estimate when truncated
  bool analytic_tail = false;
  double total = 0.0;
};

/// Quadrature of the trajectory's discounted utility, recomputed from the
/// samples, with the tail after the last sample.
inline UtilityReport utility_report(const Trajectory& tr, const StationaryProblem& p) {
  UtilityReport rep;
  for (std::size_t m = 1; m < tr.samples.size(); ++m)
    rep.integral += 0.5 * (tr.samples[m].t - tr.samples[m - 1].t) *
                    (detail::integrand_right(p, tr.samples[m - 1]) +
                     detail::integrand_left(p, tr, m));
  for (const auto& e : tr.events) rep.costs += e.discounted_cost;
  rep.total = rep.integral - rep.costs;
  if (tr.samples.empty()) return rep;

  const auto& last = tr.samples.back();
  const RegimeId i = last.regime;
  const double z = last.k - p.regime(i).x;
  bool closed_form = z > 0.0 && p.prefs.gamma > 1.0;
  if (closed_form) {
    try {
      analytic::require_closed_form(p, i);
    } catch (const PreconditionError&) {
      closed_form = false;
    }
  }
  const bool use_tail =
      tr.tail_handling == TailHandling::analytic_tail ||
      (tr.tail_handling == TailHandling::automatic && closed_form);
  if (use_tail && closed_form) {
    rep.analytic_tail = true;
    rep.tail = detail::discount(p, last.t) * analytic::q_coefficient(p, i) *
               std::pow(z, 1.0 - p.prefs.gamma);
    rep.total += rep.tail;
  } else if (closed_form) {
    rep.tail_bound = std::abs(detail::discount(p, last.t) * analytic::q_coefficient(p, i) *
                              std::pow(z, 1.0 - p.prefs.gamma));
  } else if (last.u_inst != 0.0) {
    // Constant-consumption reading of the tail.
    rep.tail_bound = std::abs(detail::discount(p, last.t) * last.u_inst /
                              p.prefs.effective_discount());
  }
  return rep;
}

inline double total_utility(const Trajectory& tr, const StationaryProblem& p) {
  return utility_report(tr, p).total;
}

/// |v_{i0}(k0) - [int_0^r e^{-rho s} u ds - costs before r + e^{-rho r} v_{theta(r-)}(k(r))]|
template <ValuedPolicy P>
double dpp_check(const StationaryProblem& p, const P& pol, const Trajectory& tr, double r) {
  if (tr.samples.empty()) throw std::out_of_range("empty trajectory");
  if (!(r >= 0.0) || r > tr.samples.back().t)
    throw std::out_of_range("dpp_check: r outside the trajectory span");
  const double v0 = pol.value(tr.initial_regime, tr.k0);
  if (r == 0.0) return std::abs(v0 - pol.value(tr.initial_regime, tr.k0));

  double integral = 0.0, costs = 0.0;
  for (const auto& e : tr.events)
    if (e.t < r) costs += e.discounted_cost;
  RegimeId regime = tr.initial_regime;
  double k_r = tr.k0;
  for (std::size_t m = 1; m < tr.samples.size(); ++m) {
    const auto& a = tr.samples[m - 1];
    const auto& b = tr.samples[m];
    if (a.t >= r) break;
    const double fa = detail::integrand_right(p, a);
    const double fb = detail::integrand_left(p, tr, m);
    regime = a.regime;
    if (b.t <= r) {
      integral += 0.5 * (b.t - a.t) * (fa + fb);
      k_r = b.k;
      if (b.t == r && !tr.event_at(m)) regime = b.regime;
      continue;
    }
    const double w = (r - a.t) / (b.t - a.t);
    integral += 0.5 * (r - a.t) * (fa + (fa + w * (fb - fa)));
    k_r = a.k + w * (b.k - a.k);
    break;
  }
  return std::abs(v0 - (integral - costs +
                        detail::discount(p, r) * pol.value(regime, k_r)));
}

struct EulerReport {
  double max_residual = 0.0;
  std::size_t samples_used = 0;
};

/// max |c'/c - (f_i'(k) - delta - pi - rho_eff) / gamma| over interior samples
/// at least 2 dt away from every switch event.
inline EulerReport euler_residual(const Trajectory& tr, const StationaryProblem& p) {
  EulerReport rep;
  const auto& s = tr.samples;
  const double guard = 2.0 * tr.dt * (1.0 - 1e-9);
  for (std::size_t m = 1; m + 1 < s.size(); ++m) {
    if (s[m - 1].regime != s[m].regime || s[m + 1].regime != s[m].regime) continue;
    bool near_event = false;
    for (const auto& e : tr.events)
      if (std::abs(s[m].t - e.t) < guard) near_event = true;
    if (near_event) continue;

    const double h0 = s[m].t - s[m - 1].t, h1 = s[m + 1].t - s[m].t;
    // Three-point derivative on a possibly uneven stencil.
    const double dc = (-h1 / (h0 * (h0 + h1))) * s[m - 1].c +
                      ((h1 - h0) / (h0 * h1)) * s[m].c +
                      (h0 / (h1 * (h0 + h1))) * s[m + 1].c;
    const auto& reg = p.regime(s[m].regime);
    const double dep = p.prefs.effective_depreciation();
    double mp;
    if (p.depreciation == DepreciationBase::productive)
      mp = s[m].k > reg.x ? reg.A - dep : 0.0;
    else
      mp = (s[m].k > reg.x ? reg.A : 0.0) - dep;
    const double target = (mp - p.prefs.effective_discount()) / p.prefs.gamma;
    rep.max_residual = std::max(rep.max_residual, std::abs(dc / s[m].c - target));
    ++rep.samples_used;
  }
  return rep;
}

struct ProbeReport {
  bool holds = true;
  std::size_t samples = 0;
  bool exited = false;           // a path left k > 0
  double exit_time = 0.0;
  double max_lipschitz_ratio = 0.0; // |kx - ky| / (e^{D t}|x - y|)
  double max_growth_ratio = 0.0;    // |k| / ((1 + |x|) e^{M4 t})
  double D = 0.0;
  double M4 = 0.0;
};

/// Integrates two initial conditions under the same constant consumption and
/// checks the Gronwall stability bound and the linear growth bound.
inline ProbeReport dynamics_probes(const StationaryProblem& p, RegimeId i, double x, double y,
                                   double T, double c, double dt = 1e-3) {
  if (!(x > 0.0 && y > 0.0)) throw PreconditionError("probe requires x, y > 0");
  if (!(T > 0.0 && dt > 0.0)) throw std::invalid_argument("probe requires T, dt > 0");
  ProbeReport rep;
  rep.D = p.regime(i).A + p.prefs.effective_depreciation();
  rep.M4 = rep.D + 1.0;
  const ConstantPolicy pol{c};
  const double slack = 1e-12;

  double t = 0.0, kx = x, ky = y;
  auto check = [&] {
    const double lip = std::exp(rep.D * t) * std::abs(x - y);
    const double diff = std::abs(kx - ky);
    if (lip > 0.0) rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, diff / lip);
    if (diff > lip * (1.0 + slack) + slack) rep.holds = false;
    for (const auto& [k0, k] : {std::pair{x, kx}, std::pair{y, ky}}) {
      const double bound = (1.0 + std::abs(k0)) * std::exp(rep.M4 * t);
      rep.max_growth_ratio = std::max(rep.max_growth_ratio, std::abs(k) / bound);
      if (std::abs(k) > bound * (1.0 + slack)) rep.holds = false;
    }
    ++rep.samples;
  };

  check();
  while (t < T - 1e-12 * T) {
    const double h = std::min(dt, T - t);
    const double nx = detail::rk4_step(p, pol, i, kx, h);
    const double ny = detail::rk4_step(p, pol, i, ky, h);
    if (!(nx > 0.0) || !(ny > 0.0)) {
      rep.exited = true;
      rep.exit_time = t + h;
      break;
    }
    t += h;
    kx = nx;
    ky = ny;
    check();
  }
  return rep;
}

} // namespace estqvi
