#pragma once

// Subcommands: validate | analytic | solve | simulate | compare.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "io.hpp"
#include "problem.hpp"
#include "simulate.hpp"
#include "solver.hpp"

namespace estqvi::cli {

namespace fs = std::filesystem;
using io::json;

enum ExitCode : int {
  ok = 0,
  domain_failure = 1,
  parse_failure = 2,
  not_converged = 3,
  compare_failure = 4,
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline void require_valid(const StationaryProblem& p) {
  const auto rep = validate_problem(p);
  if (rep.valid()) return;
  std::string msg = "invalid problem:";
  for (const auto& v : rep.violations) msg += " [" + v.code + "] " + v.message + ";";
  throw PreconditionError(msg);
}

inline void emit_json(const io::RunConfig& cfg, const fs::path& dir, const std::string& name,
                      const json& j) {
  if (cfg.output.json) io::write_json(dir / name, j);
}

inline void emit_csv(const io::RunConfig& cfg, const fs::path& dir, const std::string& name,
                     const std::string& text) {
  if (cfg.output.csv) io::write_text(dir / name, text);
}

inline json pair_json(const StationaryProblem& p, RegimeId i, RegimeId j) {
  return {{"i", i}, {"j", j}, {"a", io::bound(analytic::a_ratio(p, i, j))},
          {"k", io::bound(analytic::k_threshold(p, i, j))}};
}

/// Points excluded (with one grid cell each side) from value comparisons.
inline std::vector<double> comparison_breakpoints(const StationaryProblem& p) {
  std::vector<double> out;
  for (const auto& r : p.regimes) out.push_back(r.x);
  for (RegimeId i = 1; i <= p.regime_count(); ++i)
    for (RegimeId j = i + 1; j <= p.regime_count(); ++j) {
      const double k = analytic::k_threshold(p, i, j);
      if (std::isfinite(k)) out.push_back(k);
    }
  return out;
}

/// Warns when k_max is closer than a factor 1.5 to the largest threshold.
inline void check_domain(const StationaryProblem& p, const Grid& grid, std::ostream& err) {
  double largest = 0.0;
  for (const auto& r : p.regimes) largest = std::max(largest, r.x);
  try {
    analytic::require_closed_form(p);
    for (RegimeId i = 1; i <= p.regime_count(); ++i)
      for (RegimeId j = i + 1; j <= p.regime_count(); ++j) {
        const double k = analytic::k_threshold(p, i, j);
        if (std::isfinite(k)) largest = std::max(largest, k);
      }
  } catch (const PreconditionError&) {
    // No closed-form thresholds; the production thresholds x_i remain.
  }
  if (grid.k_max() < 1.5 * largest)
    err << "warning: k_max = " << io::format_double(grid.k_max())
        << " is below 1.5 x the largest threshold " << io::format_double(largest) << '\n';
}

inline std::optional<double> first_switch(const RegionReport& rep, RegimeId i) {
  const auto& pieces = rep.of(i).switch_pieces;
  if (pieces.empty()) return std::nullopt;
  return pieces.front().interval.lo;
}

} // namespace detail

inline int run_validate(const io::RunConfig& cfg, const fs::path& dir, Streams s) {
  const auto rep = validate_problem(cfg.problem);
  json violations = json::array();
  for (const auto& v : rep.violations) {
    s.out << "violation " << v.code << ": " << v.message << '\n';
    violations.push_back({{"code", v.code}, {"message", v.message}});
  }
  if (rep.valid()) s.out << "valid\n";
  detail::emit_json(cfg, dir, "validation.json",
                    {{"valid", rep.valid()},
                     {"violations", violations},
                     {"growth_margins", rep.growth_margins}});
  return rep.valid() ? ok : domain_failure;
}

inline int run_analytic(const io::RunConfig& cfg, const fs::path& dir, Streams s) {
  const auto& p = cfg.problem;
  detail::require_valid(p);
  analytic::require_closed_form(p);
  const auto sol = analytic::solve(p);
  const std::size_t I = p.regime_count();

  json regimes = json::array(), pairs = json::array();
  for (RegimeId i = 1; i <= I; ++i)
    regimes.push_back({{"regime", i},
                       {"Q", analytic::q_coefficient(p, i)},
                       {"growth_rate", analytic::growth_rate(p, i)},
                       {"mpc", analytic::mpc(p, i)},
                       {"euler_growth_rate", analytic::euler_growth_rate(p, i)}});
  for (RegimeId i = 1; i <= I; ++i)
    for (RegimeId j = i + 1; j <= I; ++j) pairs.push_back(detail::pair_json(p, i, j));

  json thresholds{{"regimes", regimes},
                  {"pairs", pairs},
                  {"regions", io::regions_json(sol.regions)},
                  {"kinks", sol.kinks}};
  if (I == 2) {
    json phases = json::array();
    for (const auto& ph : analytic::equilibrium_path(p, cfg.sim.i0, cfg.sim.k0))
      phases.push_back({{"regime", ph.regime},
                        {"t_begin", ph.t_begin},
                        {"t_end", io::bound(ph.t_end)},
                        {"k_begin", ph.k_begin},
                        {"growth_rate", ph.growth},
                        {"mpc", ph.mpc},
                        {"R", ph.rental_rate},
                        {"w", ph.wage}});
    thresholds["equilibrium_path"] = {{"k0", cfg.sim.k0}, {"i0", cfg.sim.i0}, {"phases", phases}};
  }
  detail::emit_json(cfg, dir, "thresholds.json", thresholds);

  const Grid grid = cfg.grid.make();
  std::vector<std::string> header{"k"};
  for (RegimeId i = 1; i <= I; ++i) header.push_back("vtilde_" + std::to_string(i));
  header.push_back("v");
  for (RegimeId i = 1; i <= I; ++i) header.push_back("c_" + std::to_string(i));
  io::CsvWriter csv(header);
  const double ninf = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double k = grid.node(m);
    std::vector<double> row{k};
    for (RegimeId i = 1; i <= I; ++i) row.push_back(analytic::stay_value(p, i, k).value_or(ninf));
    row.push_back(sol(k).value_or(ninf));
    for (RegimeId i = 1; i <= I; ++i)
      row.push_back(k > p.regime(i).x ? analytic::stay_consumption(p, i, k) : 0.0);
    csv.row(row);
  }
  detail::emit_csv(cfg, dir, "value.csv", csv.str());

  for (const auto& pr : pairs)
    s.out << "k_" << pr["i"].get<int>() << pr["j"].get<int>() << " = "
          << io::format_double(pr["k"].is_null() ? std::nan("") : pr["k"].get<double>()) << '\n';
  return ok;
}

inline int run_solve(const io::RunConfig& cfg, const fs::path& dir, Streams s) {
  detail::require_valid(cfg.problem);
  const Grid grid = cfg.grid.make();
  detail::check_domain(cfg.problem, grid, s.err);
  const auto sol = solve_qvi(cfg.problem, grid, cfg.solver);
  const auto regions = extract_regions(sol);
  detail::emit_csv(cfg, dir, "solution.csv", io::solution_csv(sol));
  detail::emit_json(cfg, dir, "regions.json", io::regions_json(regions));
  detail::emit_json(cfg, dir, "diagnostics.json", io::diagnostics_json(sol.diagnostics));
  s.out << "iterations " << sol.diagnostics.iterations << ", converged "
        << (sol.diagnostics.converged ? "yes" : "no") << '\n';
  if (!sol.diagnostics.converged) {
    s.err << "solver did not converge within " << cfg.solver.max_iter << " sweeps\n";
    return not_converged;
  }
  return ok;
}

namespace detail {

template <ValuedPolicy P>
int simulate_with(const io::RunConfig& cfg, const fs::path& dir, Streams s, const P& pol) {
  const auto& p = cfg.problem;
  const auto tr = simulate(p, pol, cfg.sim.i0, cfg.sim.k0, cfg.sim.sim);
  const auto util = utility_report(tr, p);
  const double r = 0.5 * std::min(cfg.sim.sim.t_max, tr.samples.back().t);
  const auto euler = euler_residual(tr, p);

  emit_csv(cfg, dir, "trajectory.csv", io::trajectory_csv(tr, p));
  emit_json(cfg, dir, "events.json", io::events_json(tr));
  emit_json(cfg, dir, "summary.json",
            {{"total_utility", util.total},
             {"utility_integral", util.integral},
             {"switching_costs", util.costs},
             {"tail", util.tail},
             {"tail_bound", util.tail_bound},
             {"analytic_tail", util.analytic_tail},
             {"dpp_r", r},
             {"dpp_residual", dpp_check(p, pol, tr, r)},
             {"euler_residual", euler.max_residual},
             {"euler_samples", euler.samples_used},
             {"switch_count", tr.events.size()},
             {"samples", tr.samples.size()},
             {"truncated", tr.truncation.has_value()}});
  s.out << tr.events.size() << " switch event(s)";
  for (const auto& e : tr.events) s.out << "; t=" << io::format_double(e.t) << ' ' << e.from << "->" << e.to;
  s.out << "\ntotal utility " << io::format_double(util.total) << '\n';
  return ok;
}

} // namespace detail

inline int run_simulate(const io::RunConfig& cfg, const fs::path& dir, Streams s) {
  const auto& p = cfg.problem;
  detail::require_valid(p);
  switch (cfg.sim.policy) {
  case io::PolicySource::analytic: {
    analytic::require_closed_form(p);
    const AnalyticPolicy pol(p);
    return detail::simulate_with(cfg, dir, s, pol);
  }
  case io::PolicySource::solve: {
    const auto sol = solve_qvi(p, cfg.grid.make(), cfg.solver);
    if (!sol.diagnostics.converged) {
      s.err << "policy solve did not converge\n";
      return not_converged;
    }
    return detail::simulate_with(cfg, dir, s, NumericPolicy(sol));
  }
  case io::PolicySource::file: {
    if (cfg.sim.solution_file.empty())
      throw PreconditionError("sim.policy is \"file\" but sim.solution_file is not set");
    const auto sol = io::read_solution_csv(cfg.sim.solution_file, p.costs);
    return detail::simulate_with(cfg, dir, s, NumericPolicy(sol));
  }
  }
  return domain_failure;
}

inline int run_compare(const io::RunConfig& cfg, const fs::path& dir, Streams s) {
  const auto& p = cfg.problem;
  const auto& oracle = cfg.oracle ? *cfg.oracle : p;
  detail::require_valid(p);
  detail::require_valid(oracle);
  analytic::require_closed_form(oracle);
  // A single regime has no regions; its oracle is the stay value.
  const bool single = oracle.regime_count() == 1;
  std::optional<analytic::AnalyticSolution> ana_sol;
  if (!single) ana_sol = analytic::solve(oracle);
  auto exact_value = [&](double k) {
    return single ? analytic::stay_value(oracle, 1, k) : (*ana_sol)(k);
  };
  const Grid grid = cfg.grid.make();
  detail::check_domain(oracle, grid, s.err);
  const auto sol = solve_qvi(p, grid, cfg.solver);
  const auto regions = extract_regions(sol);
  const auto& acc = cfg.acceptance;
  const double h = grid.spacing();

  // Value error profile.
  const double lo = acc.window_lo.value_or(grid.k_min());
  const double hi = acc.window_hi.value_or(grid.k_max());
  const auto breaks = detail::comparison_breakpoints(oracle);
  json prof_k = json::array(), prof_err = json::array();
  double sup_abs = 0.0, sup_rel = 0.0, at = std::nan("");
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double k = grid.node(m);
    if (k < lo || k > hi) continue;
    if (std::any_of(breaks.begin(), breaks.end(),
                    [&](double b) { return std::abs(k - b) <= h; }))
      continue;
    const auto exact = exact_value(k);
    if (!exact.is_finite()) continue;
    const auto vals = sol.values_at(m);
    const double num = *std::max_element(vals.begin(), vals.end());
    const double abs_err = std::abs(num - exact.value());
    const double rel = abs_err / std::abs(exact.value());
    sup_abs = std::max(sup_abs, abs_err);
    if (rel > sup_rel) {
      sup_rel = rel;
      at = k;
    }
    prof_k.push_back(k);
    prof_err.push_back(rel);
  }

  // First point of S_1 against the analytic one.
  const auto k_hat = detail::first_switch(regions, 1);
  const auto k_ana =
      single ? std::nullopt : detail::first_switch(ana_sol->regions, 1);
  json threshold = nullptr;
  double thr_cells = std::numeric_limits<double>::infinity();
  if (k_ana) {
    if (k_hat) thr_cells = std::abs(*k_hat - *k_ana) / h;
    threshold = {{"analytic", *k_ana},
                 {"numeric", k_hat ? json(*k_hat) : json(nullptr)},
                 {"cells", io::bound(thr_cells)}};
  }

  // Switch time of a numeric-policy path against the closed form.
  json switch_time = nullptr;
  double st_rel = 0.0;
  bool st_checked = false;
  if (k_ana && cfg.sim.i0 == 1 && cfg.sim.k0 < *k_ana &&
      analytic::growth_rate(oracle, 1) > 0.0 && cfg.sim.k0 > oracle.regime(1).x) {
    const double t_ana = analytic::switch_time(oracle, 1, cfg.sim.k0, *k_ana);
    const auto tr = simulate(p, NumericPolicy(sol), 1, cfg.sim.k0, cfg.sim.sim);
    st_checked = true;
    st_rel = tr.events.empty() ? std::numeric_limits<double>::infinity()
                               : std::abs(tr.events.front().t - t_ana) / t_ana;
    switch_time = {{"analytic", t_ana},
                   {"numeric", tr.events.empty() ? json(nullptr) : json(tr.events.front().t)},
                   {"rel_error", io::bound(st_rel)}};
  }

  std::vector<std::string> failing;
  if (!(sup_rel <= acc.value_rel_tol)) failing.push_back("value_rel_error");
  if (k_ana && !(thr_cells <= acc.threshold_cells)) failing.push_back("threshold_cells");
  if (st_checked && !(st_rel <= acc.switch_time_rel_tol)) failing.push_back("switch_time_rel_error");
  if (!sol.diagnostics.converged) failing.push_back("solver_converged");

  detail::emit_json(
      cfg, dir, "compare.json",
      {{"value", {{"sup_abs_error", sup_abs},
                  {"sup_rel_error", sup_rel},
                  {"sup_rel_error_at", std::isnan(at) ? json(nullptr) : json(at)},
                  {"window", {lo, hi}},
                  {"excluded_points", breaks},
                  {"excluded_cells_each_side", 1},
                  {"profile", {{"k", prof_k}, {"rel_error", prof_err}}}}},
       {"threshold", threshold},
       {"switch_time", switch_time},
       {"grid", {{"k_min", grid.k_min()}, {"k_max", grid.k_max()}, {"n", grid.size()}}},
       {"solver", io::diagnostics_json(sol.diagnostics)},
       {"tolerances", {{"value_rel_tol", acc.value_rel_tol},
                       {"threshold_cells", acc.threshold_cells},
                       {"switch_time_rel_tol", acc.switch_time_rel_tol}}},
       {"failing", failing},
       {"pass", failing.empty()}});

  s.out << "sup relative value error " << io::format_double(sup_rel) << '\n';
  if (failing.empty()) return ok;
  for (const auto& f : failing) s.err << "tolerance failure: " << f << '\n';
  return compare_failure;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Loads the config, dispatches, maps failures to exit codes and writes
/// meta.json. `out_dir` empty means output.directory, then ./out.
inline int run(const std::string& subcommand, const fs::path& config_path, fs::path out_dir,
               Streams s) {
  static const std::vector<std::string> known{"validate", "analytic", "solve", "simulate",
                                              "compare"};
  if (std::find(known.begin(), known.end(), subcommand) == known.end()) {
    s.err << "unknown subcommand \"" << subcommand << "\"\n";
    return parse_failure;
  }

  io::RunConfig cfg;
  try {
    cfg = io::load_config(config_path);
  } catch (const io::ConfigError& e) {
    s.err << "config error: " << e.what() << '\n';
    return parse_failure;
  }
  if (out_dir.empty())
    out_dir = cfg.output.directory.empty() ? fs::path("out") : fs::path(cfg.output.directory);
  fs::create_directories(out_dir);

  const std::string started = utc_timestamp();
  int code = ok;
  std::string error;
  try {
    if (subcommand == "validate")
      code = run_validate(cfg, out_dir, s);
    else if (subcommand == "analytic")
      code = run_analytic(cfg, out_dir, s);
    else if (subcommand == "solve")
      code = run_solve(cfg, out_dir, s);
    else if (subcommand == "simulate")
      code = run_simulate(cfg, out_dir, s);
    else
      code = run_compare(cfg, out_dir, s);
  } catch (const std::exception& e) {
    // Preconditions, invalid problems and bad numeric settings.
    error = e.what();
    s.err << "error: " << error << '\n';
    code = domain_failure;
  }

  json meta{{"subcommand", subcommand},
            {"config", fs::absolute(config_path).string()},
            {"spec_version", cfg.spec_version},
            {"started_utc", started},
            {"exit_code", code}};
  if (!error.empty()) meta["error"] = error;
  io::write_json(out_dir / "meta.json", meta);
  return code;
}

} // namespace estqvi::cli
