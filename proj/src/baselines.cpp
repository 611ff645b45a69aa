#include "scatter/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "scatter/distributions.hpp"
#include "scatter/linalg.hpp"

namespace scatter {

double median(Vec values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  size_t n = values.size();
  size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

namespace {

// Solves L L^T x = b in place given the lower Cholesky factor.
void cholesky_solve(const Matrix& l, Vec& x) {
  const int n = l.rows();
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
}

}  // namespace

SymMatrix tyler_m(const Matrix& data, const TylerConfig& cfg) {
  const int p = data.cols();
  int n = data.rows();
  if (p < 1) throw std::invalid_argument("tyler_m: empty data");

  std::vector<int> keep;
  keep.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double* r = data.row(i);
    bool zero = true;
    for (int j = 0; j < p; ++j)
      if (r[j] != 0.0) { zero = false; break; }
    if (!zero) keep.push_back(i);
  }
  if (static_cast<int>(keep.size()) < n)
    std::fprintf(stderr, "tyler_m: dropped %d zero rows\n", n - static_cast<int>(keep.size()));
  n = static_cast<int>(keep.size());
  if (n <= p) throw std::invalid_argument("tyler_m: need n > p nonzero rows");

  if (p == 1) return SymMatrix::identity(1);

  SymMatrix sigma = SymMatrix::identity(p);
  Vec x(p);
  for (int it = 0; it < cfg.max_iter; ++it) {
    Matrix l;
    try {
      l = cholesky(sigma);
    } catch (const std::exception&) {
      throw std::runtime_error("tyler_m: singular iterate at iteration " + std::to_string(it));
    }
    SymMatrix next(p);
    Matrix acc(p, p);
    for (int idx : keep) {
      const double* r = data.row(idx);
      for (int j = 0; j < p; ++j) x[j] = r[j];
      cholesky_solve(l, x);
      double q = 0.0;
      for (int j = 0; j < p; ++j) q += r[j] * x[j];
      if (!(q > 0.0))
        throw std::runtime_error("tyler_m: nonpositive Mahalanobis form at iteration " +
                                 std::to_string(it));
      double f = static_cast<double>(p) / (static_cast<double>(n) * q);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b <= a; ++b) acc(a, b) += f * r[a] * r[b];
    }
    double trace = 0.0;
    for (int a = 0; a < p; ++a) trace += acc(a, a);
    double norm = static_cast<double>(p) / trace;
    for (int a = 0; a < p; ++a)
      for (int b = 0; b <= a; ++b) next.set(a, b, acc(a, b) * norm);

    double diff = 0.0, base = 0.0;
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        double d = next(a, b) - sigma(a, b);
        diff += d * d;
        base += sigma(a, b) * sigma(a, b);
      }
    sigma = next;
    if (std::sqrt(diff) <= cfg.tol * std::sqrt(base)) break;
  }
  return sigma;
}

SymMatrix scaled_kendall_tau(const Matrix& data, Rng& rng, uint64_t pair_budget) {
  const int n = data.rows(), p = data.cols();
  if (n < 2) throw std::domain_error("scaled_kendall_tau: need at least 2 rows");

  const uint64_t total = static_cast<uint64_t>(n) * (n - 1) / 2;
  std::vector<int64_t> acc(static_cast<size_t>(p) * p, 0);
  std::vector<int8_t> sgn(p);
  uint64_t used = 0;

  auto accumulate_pair = [&](int i, int j) {
    const double* a = data.row(i);
    const double* b = data.row(j);
    for (int c = 0; c < p; ++c) {
      double d = a[c] - b[c];
      sgn[c] = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    }
    for (int r = 0; r < p; ++r) {
      if (sgn[r] == 0) continue;
      int64_t* row = acc.data() + static_cast<size_t>(r) * p;
      for (int c = r + 1; c < p; ++c) row[c] += sgn[r] * sgn[c];
    }
    ++used;
  };

  if (total <= pair_budget) {
    for (int i = 0; i < n - 1; ++i)
      for (int j = i + 1; j < n; ++j) accumulate_pair(i, j);
  } else {
    std::vector<uint64_t> idx = sample_distinct_indices(rng, total, pair_budget);
    for (uint64_t k : idx) {
      // Decode pair index: row i starts at i*(n-1) - i*(i-1)/2.
      uint64_t i = 0;
      {
        double nd = n, kd = static_cast<double>(k);
        double id = std::floor(((2.0 * nd - 1.0) -
                                std::sqrt((2.0 * nd - 1.0) * (2.0 * nd - 1.0) - 8.0 * kd)) /
                               2.0);
        i = static_cast<uint64_t>(std::max(0.0, id));
        auto row_start = [n](uint64_t r) {
          return r * static_cast<uint64_t>(n - 1) - r * (r - 1) / 2;
        };
        while (i > 0 && row_start(i) > k) --i;
        while (row_start(i + 1) <= k) ++i;
        uint64_t j = k - row_start(i) + i + 1;
        accumulate_pair(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }

  SymMatrix khat(p);
  for (int r = 0; r < p; ++r) {
    khat.set(r, r, 1.0);
    for (int c = r + 1; c < p; ++c) {
      double tau = static_cast<double>(acc[static_cast<size_t>(r) * p + c]) /
                   static_cast<double>(used);
      khat.set(r, c, std::sin(1.5707963267948966 * tau));
    }
  }

  Vec scale(p);
  Vec col(n);
  for (int c = 0; c < p; ++c) {
    for (int i = 0; i < n; ++i) col[i] = data(i, c) * data(i, c);
    scale[c] = std::sqrt(median(col));
  }

  SymMatrix out(p);
  const double inv_q = 1.0 / kDepthBeta;  // 1 / median(chi^2_1)
  for (int r = 0; r < p; ++r)
    for (int c = 0; c <= r; ++c) out.set(r, c, inv_q * scale[r] * scale[c] * khat(r, c));
  return out;
}

SymMatrix sample_covariance(const Matrix& data) {
  const int n = data.rows(), p = data.cols();
  if (n < 2) throw std::invalid_argument("sample_covariance: need at least 2 rows");
  Vec mean(p, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* r = data.row(i);
    for (int j = 0; j < p; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= n;
  SymMatrix cov(p);
  Matrix acc(p, p);
  for (int i = 0; i < n; ++i) {
    const double* r = data.row(i);
    for (int a = 0; a < p; ++a) {
      double da = r[a] - mean[a];
      for (int b = 0; b <= a; ++b) acc(a, b) += da * (r[b] - mean[b]);
    }
  }
  for (int a = 0; a < p; ++a)
    for (int b = 0; b <= a; ++b) cov.set(a, b, acc(a, b) / n);
  return cov;
}

Depth1DResult depth_1d(const Vec& data, const DepthConfig1D& cfg) {
  if (cfg.grid.empty()) throw std::invalid_argument("depth_1d: empty grid");
  for (double g : cfg.grid)
    if (!(g > 0.0)) throw std::invalid_argument("depth_1d: grid values must be positive");

  Vec sq(data.size());
  for (size_t i = 0; i < data.size(); ++i) sq[i] = data[i] * data[i];

  Depth1DResult res;
  res.profile.reserve(cfg.grid.size());
  double best = std::numeric_limits<double>::infinity();
  res.gamma2_hat = cfg.grid.front();
  for (double g : cfg.grid) {
    double thr = cfg.beta_const * g;
    size_t le = 0, ge = 0;
    for (double s : sq) {
      if (s <= thr) ++le;
      if (s >= thr) ++ge;
    }
    double value = static_cast<double>(std::max(le, ge)) / static_cast<double>(data.size());
    res.profile.emplace_back(g, value);
    if (value < best) {
      best = value;
      res.gamma2_hat = g;
    }
  }
  return res;
}

}  // namespace scatter
