#pragma once

#include <cmath>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <estqvi/problem.hpp>

namespace fixtures {

using estqvi::StationaryProblem;
using estqvi::SwitchingCostMatrix;

/// Two AK regimes: A = (0.2, 0.3), x = (0, 1), gamma = 2, rho = 0.04,
/// delta = 0.05, pi = 0, vanishing costs.
inline StationaryProblem benchmark() {
  StationaryProblem p;
  p.regimes = {{0.2, 0.0}, {0.3, 1.0}};
  p.prefs.gamma = 2.0;
  p.prefs.rho = 0.04;
  p.prefs.delta = 0.05;
  p.prefs.pi = 0.0;
  p.costs = SwitchingCostMatrix::vanishing(2);
  return p;
}

inline StationaryProblem costed(double eta) {
  auto p = benchmark();
  p.costs = SwitchingCostMatrix::uniform(2, eta);
  return p;
}

inline StationaryProblem single_regime() {
  auto p = benchmark();
  p.regimes = {{0.2, 0.0}};
  p.costs = SwitchingCostMatrix::vanishing(1);
  return p;
}

/// Three regimes with k12 < min(k13, k23).
inline StationaryProblem three_regime() {
  auto p = benchmark();
  p.regimes = {{0.2, 0.0}, {0.3, 1.0}, {0.4, 2.0}};
  p.costs = SwitchingCostMatrix::vanishing(3);
  return p;
}

// High-precision reference evaluations, written directly from the formulas.
namespace hp {

using real = boost::multiprecision::cpp_dec_float_50;

inline real bracket(real A, real gamma, real rho, real delta) {
  return rho + (A - delta) * (gamma - 1);
}

inline real Q(real A, real gamma, real rho, real delta) {
  return boost::multiprecision::pow(gamma, gamma) / (1 - gamma) *
         boost::multiprecision::pow(bracket(A, gamma, rho, delta), -gamma);
}

inline real a(real Ai, real Aj, real gamma, real rho, real delta) {
  return boost::multiprecision::pow(
      1 + (Aj - Ai) * (gamma - 1) / bracket(Ai, gamma, rho, delta), gamma / (gamma - 1));
}

inline real k(real xi, real xj, real aij) { return xj + (xj - xi) / (aij - 1); }

inline real t_switch(real A, real x, real gamma, real rho, real delta, real k0, real target) {
  return gamma / (A - rho - delta) * boost::multiprecision::log((target - x) / (k0 - x));
}

inline double d(const real& v) { return v.convert_to<double>(); }

} // namespace hp

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace fixtures
