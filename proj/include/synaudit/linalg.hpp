#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace synaudit {

// Row-major dense matrix, just enough for the small normal-equation solves
// in KernelSHAP and the logistic IRLS loop.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Gaussian elimination with partial pivoting. Returns false when the system
// is numerically singular; `a` and `b` are clobbered either way.
inline bool solve_linear_system(Matrix& a, std::vector<double>& b, std::vector<double>& out) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve: shape mismatch");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::fabs(a(perm[col], col));
    for (std::size_t r = col + 1; r < n; ++r) {
      double v = std::fabs(a(perm[r], col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-12) return false;
    std::swap(perm[col], perm[pivot]);
    const double diag = a(perm[col], col);
    for (std::size_t r = col + 1; r < n; ++r) {
      double factor = a(perm[r], col) / diag;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(perm[r], c) -= factor * a(perm[col], c);
      b[perm[r]] -= factor * b[perm[col]];
    }
  }

  out.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[perm[i]];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(perm[i], c) * out[c];
    out[i] = s / a(perm[i], i);
  }
  return true;
}

}  // namespace synaudit
