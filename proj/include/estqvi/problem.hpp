#pragma once

// Problem data for stationary optimal control / optimal switching growth
// models with piecewise-linear (AK) production technologies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace estqvi {

/// Thrown when an operation's documented precondition does not hold.
class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// 1-based regime identifier.
using RegimeId = std::size_t;

struct Preferences {
  double gamma = 2.0; // CRRA coefficient; 1 means log utility
  double rho = 0.04;  // pure discount rate
  double pi = 0.0;    // population growth rate
  double delta = 0.05;

  double effective_discount() const { return rho - pi; }
  double effective_depreciation() const { return delta + pi; }
  bool log_utility() const { return gamma == 1.0; }
};

/// f_i(k) = A (k - x)_+
struct AkRegime {
  double A = 0.0;
  double x = 0.0;

  double production(double k) const { return A * std::max(k - x, 0.0); }
};

/// Which capital stock depreciation (and population dilution) acts on.
///
/// `productive` gives k' = (A_i - delta - pi)(k - x_i)_+ - c, the
/// accumulation law under which the AK stay values are exact. `total` gives
/// k' = A_i (k - x_i)_+ - (delta + pi) k - c.
enum class DepreciationBase { productive, total };

/// Constant switching costs. A matrix with every off-diagonal entry equal to
/// zero is the vanishing-cost mode.
class SwitchingCostMatrix {
public:
  SwitchingCostMatrix() = default;

  explicit SwitchingCostMatrix(std::vector<std::vector<double>> eta)
      : eta_(std::move(eta)) {}

  static SwitchingCostMatrix vanishing(std::size_t regimes) {
    return SwitchingCostMatrix(std::vector<std::vector<double>>(
        regimes, std::vector<double>(regimes, 0.0)));
  }

  static SwitchingCostMatrix uniform(std::size_t regimes, double cost) {
    std::vector<std::vector<double>> eta(regimes,
                                         std::vector<double>(regimes, cost));
    for (std::size_t i = 0; i < regimes; ++i) eta[i][i] = 0.0;
    return SwitchingCostMatrix(std::move(eta));
  }

  std::size_t size() const { return eta_.size(); }

  /// Cost of switching from regime i to regime j (1-based).
  double operator()(RegimeId i, RegimeId j) const {
    return eta_.at(i - 1).at(j - 1);
  }

  const std::vector<std::vector<double>>& rows() const { return eta_; }

  bool is_vanishing() const {
    for (std::size_t i = 0; i < eta_.size(); ++i)
      for (std::size_t j = 0; j < eta_[i].size(); ++j)
        if (i != j && eta_[i][j] != 0.0) return false;
    return true;
  }

  SwitchingCostMatrix scaled(double factor) const {
    auto eta = eta_;
    for (auto& row : eta)
      for (auto& e : row) e *= factor;
    return SwitchingCostMatrix(std::move(eta));
  }

private:
  std::vector<std::vector<double>> eta_;
};

struct StationaryProblem {
  std::vector<AkRegime> regimes;
  Preferences prefs;
  SwitchingCostMatrix costs;
  DepreciationBase depreciation = DepreciationBase::productive;

  std::size_t regime_count() const { return regimes.size(); }

  const AkRegime& regime(RegimeId i) const {
    if (i < 1 || i > regimes.size())
      throw std::out_of_range("unknown regime id " + std::to_string(i));
    return regimes[i - 1];
  }

  /// rho_eff + (A_i - delta_eff)(gamma - 1); must be positive for the
  /// infinite-horizon stay value of regime i to be finite.
  double finiteness_margin(RegimeId i) const {
    return prefs.effective_discount() +
           (regime(i).A - prefs.effective_depreciation()) * (prefs.gamma - 1.0);
  }

  /// A_i - rho - delta: positive means capital grows under the stay policy.
  double growth_margin(RegimeId i) const {
    return regime(i).A - prefs.effective_discount() -
           prefs.effective_depreciation();
  }
};

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<double> growth_margins;

  bool valid() const { return violations.empty(); }

  bool has(const std::string& code) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.code == code; });
  }
};

inline ValidationReport validate_problem(const StationaryProblem& p) {
  ValidationReport report;
  auto fail = [&](std::string code, std::string msg) {
    report.violations.push_back({std::move(code), std::move(msg)});
  };

  const auto& pr = p.prefs;
  if (!(pr.gamma > 0.0)) fail("gamma_nonpositive", "gamma must be positive");
  if (!(pr.delta >= 0.0)) fail("delta_negative", "delta must be nonnegative");
  if (!(pr.pi >= 0.0)) fail("pi_negative", "pi must be nonnegative");
  if (!(pr.rho - pr.pi > 0.0))
    fail("discount_nonpositive", "effective discount rho - pi must be positive");

  const std::size_t n = p.regimes.size();
  if (n == 0) {
    fail("no_regimes", "at least one regime is required");
    return report;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = p.regimes[i];
    const std::string id = std::to_string(i + 1);
    if (!(r.A > 0.0)) fail("technology_nonpositive", "A_" + id + " must be positive");
    if (!(r.x >= 0.0)) fail("threshold_negative", "x_" + id + " must be nonnegative");
    if (i > 0) {
      if (!(r.A > p.regimes[i - 1].A))
        fail("technology_order", "A must be strictly increasing (regime " + id + ")");
      if (!(r.x > p.regimes[i - 1].x))
        fail("threshold_order", "x must be strictly increasing (regime " + id + ")");
    }
  }

  report.growth_margins.reserve(n);
  for (RegimeId i = 1; i <= n; ++i) {
    if (!(p.finiteness_margin(i) > 0.0))
      fail("finiteness", "rho + (A_" + std::to_string(i) +
                             " - delta)(gamma - 1) must be positive");
    report.growth_margins.push_back(p.growth_margin(i));
  }

  const auto& eta = p.costs.rows();
  if (eta.size() != n ||
      std::any_of(eta.begin(), eta.end(),
                  [n](const auto& row) { return row.size() != n; })) {
    fail("cost_shape", "switching cost matrix must be I x I");
    return report;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (eta[i][i] != 0.0)
      fail("diagonal_cost_nonzero",
           "diagonal cost nonzero: eta_" + std::to_string(i + 1) +
               std::to_string(i + 1) + " must be 0");
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && !(eta[i][j] >= 0.0))
        fail("cost_negative", "switching costs must be nonnegative");
  }

  // Vanishing costs are admitted as a distinguished limit.
  if (p.costs.is_vanishing()) return report;

  bool triangle_ok = true;
  for (std::size_t i = 0; i < n && triangle_ok; ++i)
    for (std::size_t j = 0; j < n && triangle_ok; ++j)
      for (std::size_t l = 0; l < n && triangle_ok; ++l) {
        if (j == i || j == l) continue;
        if (!(eta[i][j] + eta[j][l] > eta[i][l])) {
          fail("triangle_inequality",
               "triangle inequality violated: eta_" + std::to_string(i + 1) +
                   std::to_string(j + 1) + " + eta_" + std::to_string(j + 1) +
                   std::to_string(l + 1) + " <= eta_" + std::to_string(i + 1) +
                   std::to_string(l + 1));
          triangle_ok = false;
        }
      }
  return report;
}

/// Rate of change of capital in regime i under consumption c.
inline double drift(const StationaryProblem& p, RegimeId i, double k, double c) {
  const auto& r = p.regime(i);
  const double dep = p.prefs.effective_depreciation();
  if (p.depreciation == DepreciationBase::productive)
    return (r.A - dep) * std::max(k - r.x, 0.0) - c;
  return r.production(k) - dep * k - c;
}

/// Drift at zero consumption.
inline double net_output(const StationaryProblem& p, RegimeId i, double k) {
  return drift(p, i, k, 0.0);
}

// CRRA utility and its derivatives. These take already-validated gamma and
// throw std::domain_error for nonpositive arguments.

inline double utility(const Preferences& pr, double c) {
  if (!(c > 0.0)) throw std::domain_error("utility requires c > 0");
  if (pr.log_utility()) return std::log(c);
  return std::pow(c, 1.0 - pr.gamma) / (1.0 - pr.gamma);
}

inline double marginal_utility(const Preferences& pr, double c) {
  if (!(c > 0.0)) throw std::domain_error("marginal utility requires c > 0");
  return std::pow(c, -pr.gamma);
}

inline double inverse_marginal_utility(const Preferences& pr, double m) {
  if (!(m > 0.0))
    throw std::domain_error("inverse marginal utility requires m > 0");
  return std::pow(m, -1.0 / pr.gamma);
}

inline double utility(const StationaryProblem& p, double c) {
  return utility(p.prefs, c);
}
inline double marginal_utility(const StationaryProblem& p, double c) {
  return marginal_utility(p.prefs, c);
}
inline double inverse_marginal_utility(const StationaryProblem& p, double m) {
  return inverse_marginal_utility(p.prefs, m);
}

} // namespace estqvi
