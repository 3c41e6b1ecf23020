#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "problem.hpp"

namespace estqvi {

/// A real number or minus infinity. Minus infinity compares strictly below
/// every finite value and never enters arithmetic.
class ExtendedValue {
public:
  constexpr ExtendedValue() = default;
  constexpr explicit ExtendedValue(double v) : value_(v), finite_(true) {}

  static constexpr ExtendedValue minus_infinity() { return ExtendedValue{}; }

  constexpr bool is_finite() const { return finite_; }
  constexpr bool is_minus_infinity() const { return !finite_; }

  double value() const {
    if (!finite_) throw std::domain_error("value of minus-infinity sentinel");
    return value_;
  }

  /// value() for finite, otherwise `fallback`.
  constexpr double value_or(double fallback) const {
    return finite_ ? value_ : fallback;
  }

  friend constexpr std::partial_ordering operator<=>(const ExtendedValue& a,
                                                     const ExtendedValue& b) {
    if (!a.finite_ && !b.finite_) return std::partial_ordering::equivalent;
    if (!a.finite_) return std::partial_ordering::less;
    if (!b.finite_) return std::partial_ordering::greater;
    return a.value_ <=> b.value_;
  }
  friend constexpr bool operator==(const ExtendedValue& a,
                                   const ExtendedValue& b) {
    return (a <=> b) == std::partial_ordering::equivalent;
  }

private:
  double value_ = 0.0;
  bool finite_ = false;
};

/// Half-open capital interval [lo, hi); hi may be +infinity.
struct Interval {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double k) const { return lo <= k && k < hi; }
  bool unbounded() const { return hi == std::numeric_limits<double>::infinity(); }
};

/// A piece of the transformation region S_ij.
struct SwitchPiece {
  Interval interval;
  RegimeId target = 0;
  // Grid node range for numerically extracted pieces.
  std::optional<std::size_t> first_node;
  std::optional<std::size_t> last_node;
};

struct RegimeRegions {
  RegimeId regime = 0;
  std::vector<SwitchPiece> switch_pieces; // S_i, sorted by lo
  std::vector<Interval> continuation;     // N_i, sorted by lo
};

struct RegionReport {
  std::vector<RegimeRegions> regimes;

  const RegimeRegions& of(RegimeId i) const { return regimes.at(i - 1); }

  /// Target regime at capital k when currently in regime i, 0 for stay.
  RegimeId switch_target(RegimeId i, double k) const {
    for (const auto& piece : of(i).switch_pieces)
      if (piece.interval.contains(k)) return piece.target;
    return 0;
  }
};

} // namespace estqvi
