#include "scatter/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace scatter {

namespace {

double off_diag_norm(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition sym_eig(const SymMatrix& m) {
  const int n = m.dim();
  Matrix a = m.to_matrix();
  Matrix v = Matrix::identity(n);
  if (n == 0) return {Vec{}, v};

  const double frob = std::max(frobenius_norm(a), 1e-300);
  const int max_sweeps = 100;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_diag_norm(a) <= 1e-14 * frob) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == max_sweeps)
    throw std::runtime_error("sym_eig: Jacobi sweeps did not converge for " + std::to_string(n) +
                             "x" + std::to_string(n) + " matrix");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

  EigenDecomposition e;
  e.values.resize(n);
  e.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    e.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) e.vectors(i, j) = v(i, order[j]);
  }
  return e;
}

namespace {

// Deterministic pseudo-random unit vector for the restart path.
Vec restart_vector(int n) {
  Vec v(n);
  uint64_t s = 0x9e3779b97f4a7c15ull;
  for (int i = 0; i < n; ++i) {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    v[i] = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
  }
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  return v;
}

double power_iteration_sqrt_top_eig(const Matrix& b) {
  const int n = b.rows();
  Vec v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda_prev = 0.0;
  bool restarted = false;
  for (int it = 0; it < 1000; ++it) {
    Vec w = matvec(b, v);
    double lambda = dot(v, w);
    double nw = norm2(w);
    if (nw == 0.0) {
      if (restarted) return 0.0;
      v = restart_vector(n);
      restarted = true;
      lambda_prev = 0.0;
      continue;
    }
    for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it > 0 && std::abs(lambda - lambda_prev) <= 1e-12 * std::max(1.0, std::abs(lambda)))
      return std::sqrt(std::max(lambda, 0.0));
    lambda_prev = lambda;
  }
  return std::sqrt(std::max(lambda_prev, 0.0));
}

}  // namespace

double operator_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  bool all_zero = true;
  for (double x : m.data())
    if (x != 0.0) { all_zero = false; break; }
  if (all_zero) return 0.0;
  // Power-iterate on the smaller Gram matrix.
  Matrix b = (m.rows() <= m.cols()) ? matmul(m, transpose(m)) : matmul(transpose(m), m);
  return power_iteration_sqrt_top_eig(b);
}

double operator_norm(const SymMatrix& m) { return operator_norm(m.to_matrix()); }

SymMatrix sym_sqrt(const SymMatrix& m) {
  EigenDecomposition e = sym_eig(m);
  const int n = m.dim();
  double max_abs_eig = 0.0;
  for (double lv : e.values) max_abs_eig = std::max(max_abs_eig, std::abs(lv));
  const double tol = 1e-9 * max_abs_eig;
  Vec sq(n);
  for (int i = 0; i < n; ++i) {
    double lv = e.values[i];
    if (lv < -tol)
      throw std::runtime_error("sym_sqrt: matrix has negative eigenvalue " + std::to_string(lv));
    sq[i] = std::sqrt(std::max(lv, 0.0));
  }
  SymMatrix r(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += e.vectors(i, k) * sq[k] * e.vectors(j, k);
      r.set(i, j, s);
    }
  }
  return r;
}

Matrix cholesky(const SymMatrix& m) {
  const int n = m.dim();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0)
          throw std::runtime_error("cholesky: matrix not positive definite at pivot " +
                                   std::to_string(i));
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

}  // namespace scatter
