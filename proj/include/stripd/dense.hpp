#ifndef STRIPD_DENSE_HPP
#define STRIPD_DENSE_HPP

#include <cstddef>

#include "stripd/vec.hpp"

namespace stripd {

// Row-major dense matrix, sized for desk-scale problems.
struct Matrix {
  int rows = 0;
  int cols = 0;
  Vec a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw DimensionError("Matrix: negative dimension");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }

  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

  // y = A x, one reduction per row.
  Vec mul(const Vec& x) const {
    if (static_cast<int>(x.size()) != cols)
      throw DimensionError("Matrix::mul: operand size mismatch");
    Vec y(static_cast<std::size_t>(rows));
    const auto& ops = kernels::active();
    for (int i = 0; i < rows; ++i)
      y[static_cast<std::size_t>(i)] = ops.dot(row(i), x.data(), static_cast<std::size_t>(cols));
    return y;
  }

  // y = A^T x, accumulated row by row so every variant sums in the same order.
  Vec tmul(const Vec& x) const {
    if (static_cast<int>(x.size()) != rows)
      throw DimensionError("Matrix::tmul: operand size mismatch");
    Vec y(static_cast<std::size_t>(cols), 0.0);
    const auto& ops = kernels::active();
    for (int i = 0; i < rows; ++i)
      ops.axpy(x[static_cast<std::size_t>(i)], row(i), y.data(), static_cast<std::size_t>(cols));
    return y;
  }

  Matrix transposed() const {
    Matrix t(cols, rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix matmul(const Matrix& b) const {
    if (cols != b.rows) throw DimensionError("Matrix::matmul: inner dimension mismatch");
    Matrix c(rows, b.cols);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k) {
        double v = (*this)(i, k);
        if (v == 0.0) continue;
        for (int j = 0; j < b.cols; ++j) c(i, j) += v * b(k, j);
      }
    return c;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
  }

  double max_asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < rows; ++i)
      for (int j = i + 1; j < cols; ++j)
        m = std::max(m, std::fabs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

  bool is_square() const { return rows == cols; }
};

inline Matrix operator+(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw DimensionError("Matrix operator+: shape mismatch");
  Matrix z(x.rows, x.cols);
  z.a = add(x.a, y.a);
  return z;
}

inline Matrix operator-(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw DimensionError("Matrix operator-: shape mismatch");
  Matrix z(x.rows, x.cols);
  z.a = sub(x.a, y.a);
  return z;
}

inline Matrix operator*(double s, const Matrix& x) {
  Matrix z(x.rows, x.cols);
  z.a = scaled(x.a, s);
  return z;
}

}  // namespace stripd

#endif  // STRIPD_DENSE_HPP
