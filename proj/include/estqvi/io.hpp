#pragma once

// Run configuration (JSON) and deterministic CSV / JSON writers.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "problem.hpp"
#include "regions.hpp"
#include "simulate.hpp"
#include "solver.hpp"

namespace estqvi::io {

using json = nlohmann::json;

/// Malformed or schema-violating configuration document.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  double k_min = 0.01;
  double k_max = 6.0;
  std::size_t n = 4001;

  Grid make() const { return Grid(k_min, k_max, n); }
};

enum class PolicySource { analytic, solve, file };

struct SimSection {
  SimConfig sim;
  double k0 = 0.5;
  RegimeId i0 = 1;
  PolicySource policy = PolicySource::analytic;
  std::string solution_file;
};

struct AcceptanceConfig {
  double value_rel_tol = 1e-3;
  double threshold_cells = 1.0;
  double switch_time_rel_tol = 0.01;
  std::optional<double> window_lo;
  std::optional<double> window_hi;
};

struct OutputConfig {
  std::string directory;
  bool csv = true;
  bool json = true;
};

struct RunConfig {
  int spec_version = 1;
  StationaryProblem problem;
  std::optional<StationaryProblem> oracle; // analytic side of compare
  GridConfig grid;
  SolverConfig solver;
  SimSection sim;
  AcceptanceConfig acceptance;
  OutputConfig output;
};

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
}

inline double number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline void read_number(const json& obj, const std::string& key, const std::string& where,
                        double& out) {
  if (obj.contains(key)) out = number(obj, key, where);
}

inline void read_count(const json& obj, const std::string& key, const std::string& where,
                       std::size_t& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  out = v.get<std::size_t>();
}

inline std::string string(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline SwitchingCostMatrix parse_eta(const json& eta, std::size_t regimes) {
  if (eta.is_string()) {
    if (eta.get<std::string>() != "vanishing")
      throw ConfigError("problem.eta: the only string value is \"vanishing\"");
    return SwitchingCostMatrix::vanishing(regimes);
  }
  if (eta.is_number()) return SwitchingCostMatrix::uniform(regimes, eta.get<double>());
  if (!eta.is_array()) throw ConfigError("problem.eta: expected \"vanishing\", a number or a matrix");
  std::vector<std::vector<double>> rows;
  for (const auto& row : eta) {
    if (!row.is_array()) throw ConfigError("problem.eta: matrix rows must be arrays");
    auto& r = rows.emplace_back();
    for (const auto& e : row) {
      if (!e.is_number()) throw ConfigError("problem.eta: matrix entries must be numbers");
      r.push_back(e.get<double>());
    }
  }
  return SwitchingCostMatrix(std::move(rows));
}

inline StationaryProblem parse_problem(const json& j, const std::string& where) {
  check_keys(j, {"regimes", "gamma", "rho", "delta", "pi", "eta", "depreciation"}, where);
  for (const char* key : {"regimes", "gamma", "rho", "delta"})
    if (!j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");

  StationaryProblem p;
  const auto& regs = j.at("regimes");
  if (!regs.is_array()) throw ConfigError(where + ".regimes: expected an array");
  for (std::size_t m = 0; m < regs.size(); ++m) {
    const std::string w = where + ".regimes[" + std::to_string(m) + "]";
    check_keys(regs[m], {"A", "x"}, w);
    if (!regs[m].contains("A") || !regs[m].contains("x"))
      throw ConfigError(w + ": both \"A\" and \"x\" are required");
    p.regimes.push_back({number(regs[m], "A", w), number(regs[m], "x", w)});
  }
  p.prefs.gamma = number(j, "gamma", where);
  p.prefs.rho = number(j, "rho", where);
  p.prefs.delta = number(j, "delta", where);
  read_number(j, "pi", where, p.prefs.pi);
  p.costs = j.contains("eta") ? parse_eta(j.at("eta"), p.regimes.size())
                              : SwitchingCostMatrix::vanishing(p.regimes.size());
  if (j.contains("depreciation")) {
    const auto d = string(j, "depreciation", where);
    if (d == "productive")
      p.depreciation = DepreciationBase::productive;
    else if (d == "total")
      p.depreciation = DepreciationBase::total;
    else
      throw ConfigError(where + ".depreciation: expected \"productive\" or \"total\"");
  }
  return p;
}

} // namespace detail

inline RunConfig parse_config(const json& doc) {
  using namespace detail;
  check_keys(doc, {"spec_version", "problem", "oracle", "grid", "solver", "sim", "acceptance",
                   "output"},
             "config");
  if (!doc.contains("spec_version")) throw ConfigError("config: missing \"spec_version\"");
  if (!doc.at("spec_version").is_number_integer() || doc.at("spec_version").get<int>() != 1)
    throw ConfigError("config: unsupported spec_version (expected 1)");
  if (!doc.contains("problem")) throw ConfigError("config: missing \"problem\"");

  RunConfig cfg;
  cfg.problem = parse_problem(doc.at("problem"), "problem");
  if (doc.contains("oracle")) {
    // Overrides merged onto the problem section.
    json merged = doc.at("problem");
    if (!doc.at("oracle").is_object()) throw ConfigError("oracle: expected an object");
    merged.merge_patch(doc.at("oracle"));
    cfg.oracle = parse_problem(merged, "oracle");
  }

  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    check_keys(g, {"k_min", "k_max", "n"}, "grid");
    read_number(g, "k_min", "grid", cfg.grid.k_min);
    read_number(g, "k_max", "grid", cfg.grid.k_max);
    read_count(g, "n", "grid", cfg.grid.n);
  }

  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    check_keys(s, {"tol", "max_iter", "consumption_mode", "n_c", "c_floor", "damping"}, "solver");
    read_number(s, "tol", "solver", cfg.solver.tol);
    read_count(s, "max_iter", "solver", cfg.solver.max_iter);
    read_count(s, "n_c", "solver", cfg.solver.n_c);
    read_number(s, "c_floor", "solver", cfg.solver.c_floor);
    read_number(s, "damping", "solver", cfg.solver.damping);
    if (s.contains("consumption_mode")) {
      const auto m = string(s, "consumption_mode", "solver");
      if (m == "closed_form")
        cfg.solver.consumption_mode = ConsumptionMode::closed_form;
      else if (m == "grid_search")
        cfg.solver.consumption_mode = ConsumptionMode::grid_search;
      else
        throw ConfigError("solver.consumption_mode: expected \"closed_form\" or \"grid_search\"");
    }
  }

  if (doc.contains("sim")) {
    const auto& s = doc.at("sim");
    check_keys(s, {"dt", "t_max", "k0", "i0", "event_tol", "tail_handling", "policy",
                   "solution_file"},
               "sim");
    read_number(s, "dt", "sim", cfg.sim.sim.dt);
    read_number(s, "t_max", "sim", cfg.sim.sim.t_max);
    read_number(s, "event_tol", "sim", cfg.sim.sim.event_tol);
    read_number(s, "k0", "sim", cfg.sim.k0);
    read_count(s, "i0", "sim", cfg.sim.i0);
    if (s.contains("tail_handling")) {
      const auto t = string(s, "tail_handling", "sim");
      if (t == "auto")
        cfg.sim.sim.tail_handling = TailHandling::automatic;
      else if (t == "analytic_tail")
        cfg.sim.sim.tail_handling = TailHandling::analytic_tail;
      else if (t == "truncate")
        cfg.sim.sim.tail_handling = TailHandling::truncate;
      else
        throw ConfigError("sim.tail_handling: expected \"auto\", \"analytic_tail\" or \"truncate\"");
    }
    if (s.contains("policy")) {
      const auto pol = string(s, "policy", "sim");
      if (pol == "analytic")
        cfg.sim.policy = PolicySource::analytic;
      else if (pol == "solve")
        cfg.sim.policy = PolicySource::solve;
      else if (pol == "file")
        cfg.sim.policy = PolicySource::file;
      else
        throw ConfigError("sim.policy: expected \"analytic\", \"solve\" or \"file\"");
    }
    if (s.contains("solution_file")) cfg.sim.solution_file = string(s, "solution_file", "sim");
  }

  if (doc.contains("acceptance")) {
    const auto& a = doc.at("acceptance");
    check_keys(a, {"value_rel_tol", "threshold_cells", "switch_time_rel_tol", "window"},
               "acceptance");
    read_number(a, "value_rel_tol", "acceptance", cfg.acceptance.value_rel_tol);
    read_number(a, "threshold_cells", "acceptance", cfg.acceptance.threshold_cells);
    read_number(a, "switch_time_rel_tol", "acceptance", cfg.acceptance.switch_time_rel_tol);
    if (a.contains("window")) {
      const auto& w = a.at("window");
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
        throw ConfigError("acceptance.window: expected [lo, hi]");
      cfg.acceptance.window_lo = w[0].get<double>();
      cfg.acceptance.window_hi = w[1].get<double>();
    }
  }

  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    check_keys(o, {"directory", "formats"}, "output");
    if (o.contains("directory")) cfg.output.directory = string(o, "directory", "output");
    if (o.contains("formats")) {
      const auto& f = o.at("formats");
      if (!f.is_array()) throw ConfigError("output.formats: expected an array");
      cfg.output.csv = cfg.output.json = false;
      for (const auto& e : f) {
        const std::string s = e.is_string() ? e.get<std::string>() : "";
        if (s == "csv")
          cfg.output.csv = true;
        else if (s == "json")
          cfg.output.json = true;
        else
          throw ConfigError("output.formats: entries must be \"csv\" or \"json\"");
      }
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

// ---- writers ----

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: " + s);
  return v;
}

/// Header row plus rows, comma separated, LF line endings.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    line(header);
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    line(cells);
  }

  std::string str() const { return out_.str(); }

private:
  void line(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("csv row width mismatch");
    for (std::size_t m = 0; m < cells.size(); ++m) out_ << (m ? "," : "") << cells[m];
    out_ << '\n';
  }

  std::size_t columns_;
  std::ostringstream out_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Keys sorted (nlohmann's default object map), two-space indent, trailing LF.
inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

/// +infinity (unbounded interval ends) is written as null.
inline json bound(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

inline json interval_json(const Interval& iv) { return {{"lo", bound(iv.lo)}, {"hi", bound(iv.hi)}}; }

inline json regions_json(const RegionReport& rep) {
  json regimes = json::array();
  for (const auto& r : rep.regimes) {
    json sw = json::array(), cont = json::array();
    for (const auto& piece : r.switch_pieces) {
      json e = interval_json(piece.interval);
      e["target"] = piece.target;
      if (piece.first_node) e["first_node"] = *piece.first_node;
      if (piece.last_node) e["last_node"] = *piece.last_node;
      sw.push_back(e);
    }
    for (const auto& iv : r.continuation) cont.push_back(interval_json(iv));
    regimes.push_back({{"regime", r.regime}, {"switch", sw}, {"continuation", cont}});
  }
  return {{"regimes", regimes}};
}

inline json diagnostics_json(const SolverDiagnostics& d) {
  return {{"iterations", d.iterations},
          {"converged", d.converged},
          {"final_change", d.final_change},
          {"max_hjb_residual", d.max_hjb_residual},
          {"max_obstacle_violation", d.max_obstacle_violation},
          {"scheme", d.scheme}};
}

inline std::string solution_csv(const DiscretizedSolution& sol) {
  std::vector<std::string> header{"k"};
  for (RegimeId i = 1; i <= sol.regime_count(); ++i) {
    const auto id = std::to_string(i);
    header.insert(header.end(), {"v_" + id, "c_" + id, "switch_target_" + id});
  }
  CsvWriter csv(header);
  for (std::size_t m = 0; m < sol.grid.size(); ++m) {
    std::vector<double> row{sol.grid.node(m)};
    for (std::size_t i = 0; i < sol.regime_count(); ++i)
      row.insert(row.end(), {sol.value[i][m], sol.consumption[i][m],
                             static_cast<double>(sol.switch_to[i][m])});
    csv.row(row);
  }
  return csv.str();
}

/// Reads a solution.csv back. The grid is rebuilt from the first and last k
/// and must reproduce every k column entry; costs come from the caller.
inline DiscretizedSolution read_solution_csv(const std::filesystem::path& path,
                                             const SwitchingCostMatrix& costs) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read solution file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw PreconditionError("empty solution file");
  const std::size_t cols =
      static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 4 || (cols - 1) % 3 != 0) throw PreconditionError("bad solution header");
  const std::size_t I = (cols - 1) / 3;

  std::vector<double> ks;
  DiscretizedSolution sol;
  sol.value.resize(I);
  sol.consumption.resize(I);
  sol.switch_to.resize(I);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != cols) throw PreconditionError("ragged solution row");
    ks.push_back(parse_double(cells[0]));
    for (std::size_t i = 0; i < I; ++i) {
      sol.value[i].push_back(parse_double(cells[1 + 3 * i]));
      sol.consumption[i].push_back(parse_double(cells[2 + 3 * i]));
      sol.switch_to[i].push_back(static_cast<RegimeId>(parse_double(cells[3 + 3 * i])));
    }
  }
  if (ks.size() < 3) throw PreconditionError("solution file has fewer than 3 nodes");
  sol.grid = Grid(ks.front(), ks.back(), ks.size());
  for (std::size_t m = 0; m < ks.size(); ++m)
    if (sol.grid.node(m) != ks[m]) throw PreconditionError("solution grid is not uniform");
  if (costs.size() != I) throw PreconditionError("solution regime count does not match problem");
  sol.costs = costs;
  sol.vanishing = costs.is_vanishing();
  return sol;
}

inline std::string trajectory_csv(const Trajectory& tr, const StationaryProblem& p) {
  CsvWriter csv({"t", "k", "c", "regime", "u_inst", "U_cum", "R", "w"});
  for (const auto& s : tr.samples)
    csv.row({s.t, s.k, s.c, static_cast<double>(s.regime), s.u_inst, s.U_cum,
             p.regime(s.regime).A, 0.0});
  return csv.str();
}

inline json events_json(const Trajectory& tr) {
  json ev = json::array();
  for (const auto& e : tr.events)
    ev.push_back({{"t", e.t},
                  {"from", e.from},
                  {"to", e.to},
                  {"k", e.k},
                  {"cost", e.cost},
                  {"discounted_cost", e.discounted_cost},
                  {"c_before", e.c_before},
                  {"c_after", e.c_after}});
  json out{{"events", ev}, {"truncation", nullptr}};
  if (tr.truncation)
    out["truncation"] = {{"t", tr.truncation->t}, {"k", tr.truncation->k},
                         {"reason", tr.truncation->reason}};
  return out;
}

} // namespace estqvi::io
