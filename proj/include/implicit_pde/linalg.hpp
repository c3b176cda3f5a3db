// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace implicit_pde {

/// Symmetric matrix with packed upper-triangle storage. Symmetry holds by
/// construction: (i,j) and (j,i) address the same element.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * (n + 1) / 2, fill) {}

  std::size_t size() const { return n_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }

  std::vector<double>& packed() { return data_; }
  const std::vector<double>& packed() const { return data_; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    assert(i < n_ && j < n_);
    if (i > j) std::swap(i, j);
    // row-major upper triangle: row i starts after i rows of decreasing length
    return i * n_ - i * (i - 1) / 2 + (j - i);
  }

  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Determinant by LU with partial pivoting.
inline double determinant(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 1.0;
  return Eigen::PartialPivLU<Eigen::MatrixXd>(m).determinant();
}

/// Permanent via Ryser's formula. For a matrix of absolute values this is the
/// sum of |terms| of the Leibniz expansion, the natural scale of a determinant.
inline double permanent(const Eigen::MatrixXd& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  assert(n <= 20);
  if (n == 0) return 1.0;
  double total = 0.0;
  std::vector<double> row_sums(n);
  for (std::uint32_t subset = 1; subset < (1u << n); ++subset) {
    std::fill(row_sums.begin(), row_sums.end(), 0.0);
    int bits = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(subset & (1u << j))) continue;
      ++bits;
      for (std::size_t i = 0; i < n; ++i) row_sums[i] += m(i, j);
    }
    double prod = 1.0;
    for (double s : row_sums) prod *= s;
    total += ((n - bits) % 2 == 0 ? 1.0 : -1.0) * prod;
  }
  return total;
}

/// Sum of |terms| in the Leibniz expansion of det(m).
inline double determinant_scale(const Eigen::MatrixXd& m) { return permanent(m.cwiseAbs()); }

}  // namespace implicit_pde
