#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace mfg {

/// Dense row-major matrix of doubles; just enough linear-algebra surface for
/// kernels, chains and transport plans.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<double> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Kronecker product; used to assemble product chains on pair states.
inline Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

/// result[j] = sum_i vec[i] * m(i, j); distribution one-step push-forward.
inline std::vector<double> left_multiply(std::span<const double> vec, const Matrix& m) {
  assert(static_cast<int>(vec.size()) == m.rows());
  std::vector<double> out(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    const double vi = vec[i];
    if (vi == 0.0) continue;
    for (int j = 0; j < m.cols(); ++j) out[j] += vi * m(i, j);
  }
  return out;
}

}  // namespace mfg
