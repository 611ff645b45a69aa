#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace scatter {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  const double* row(int i) const { return data_.data() + static_cast<size_t>(i) * cols_; }
  double* row(int i) { return data_.data() + static_cast<size_t>(i) * cols_; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int rows_, cols_;
  std::vector<double> data_;
};

// Symmetric matrix with full storage; writes keep both mirror entries equal.
class SymMatrix {
 public:
  SymMatrix() : dim_(0) {}
  explicit SymMatrix(int dim, double fill = 0.0)
      : dim_(dim), data_(static_cast<size_t>(dim) * dim, fill) {
    if (dim < 0) throw std::invalid_argument("SymMatrix: negative dimension");
  }

  static SymMatrix identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m.data_[static_cast<size_t>(i) * n + i] = 1.0;
    return m;
  }

  // Symmetrizes the input: stores (m + m^T) / 2.
  static SymMatrix from_full(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix::from_full: matrix not square");
    SymMatrix s(m.rows());
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j <= i; ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    return s;
  }

  int dim() const { return dim_; }

  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * dim_ + j]; }

  void set(int i, int j, double v) {
    data_[static_cast<size_t>(i) * dim_ + j] = v;
    data_[static_cast<size_t>(j) * dim_ + i] = v;
  }

  Matrix to_matrix() const {
    Matrix m(dim_, dim_);
    m.data() = data_;
    return m;
  }

  const std::vector<double>& data() const { return data_; }

 private:
  int dim_;
  std::vector<double> data_;
};

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      double* crow = c.row(i);
      for (int j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

inline Vec matvec(const Matrix& a, const Vec& x) {
  if (static_cast<int>(x.size()) != a.cols()) throw std::invalid_argument("matvec: size mismatch");
  Vec y(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* r = a.row(i);
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("Matrix subtraction: shape mismatch");
  Matrix c = a;
  for (size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("Matrix addition: shape mismatch");
  Matrix c = a;
  for (size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

inline Matrix scaled(const Matrix& a, double s) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

// a * a^T, returned as SymMatrix.
inline SymMatrix gram(const Matrix& a) {
  SymMatrix s(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j <= i; ++j) {
      double v = 0.0;
      const double* ri = a.row(i);
      const double* rj = a.row(j);
      for (int k = 0; k < a.cols(); ++k) v += ri[k] * rj[k];
      s.set(i, j, v);
    }
  }
  return s;
}

}  // namespace scatter
