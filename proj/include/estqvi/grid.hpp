#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace estqvi {

/// Uniformly spaced capital grid.
class Grid {
public:
  Grid() = default;

  Grid(double k_min, double k_max, std::size_t n)
      : k_min_(k_min), k_max_(k_max), n_(n) {
    if (!(k_min > 0.0)) throw std::invalid_argument("grid requires k_min > 0");
    if (!(k_max > k_min)) throw std::invalid_argument("grid requires k_max > k_min");
    if (n < 3) throw std::invalid_argument("grid requires at least 3 nodes");
    h_ = (k_max - k_min) / static_cast<double>(n - 1);
  }

  double k_min() const { return k_min_; }
  double k_max() const { return k_max_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }

  double node(std::size_t i) const {
    return i + 1 == n_ ? k_max_ : k_min_ + h_ * static_cast<double>(i);
  }

  std::vector<double> nodes() const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = node(i);
    return out;
  }

  /// Index of the node nearest to k (clamped to the grid).
  std::size_t nearest(double k) const {
    if (!(k > k_min_)) return 0;
    if (k >= k_max_) return n_ - 1;
    const double pos = (k - k_min_) / h_;
    const auto i = static_cast<std::size_t>(std::floor(pos + 0.5));
    return i < n_ ? i : n_ - 1;
  }

  /// Index i of the cell [node(i), node(i+1)] containing k (clamped).
  std::size_t cell(double k) const {
    if (!(k > k_min_)) return 0;
    const auto i = static_cast<std::size_t>(std::floor((k - k_min_) / h_));
    return i + 1 < n_ ? i : n_ - 2;
  }

private:
  double k_min_ = 0.0;
  double k_max_ = 0.0;
  std::size_t n_ = 0;
  double h_ = 0.0;
};

} // namespace estqvi
