#include "scatter/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "scatter/linalg.hpp"

namespace scatter {

namespace {

void fill_standard_normal(Rng& rng, Matrix& m) {
  for (double& v : m.data()) v = rng.normal();
}

// rows(out) = rows(z) * chol^T + mean
Matrix affine_rows(const Matrix& z, const Matrix& a, const Vec& mean) {
  Matrix out(z.rows(), a.rows());
  for (int i = 0; i < z.rows(); ++i) {
    const double* zi = z.row(i);
    double* oi = out.row(i);
    for (int r = 0; r < a.rows(); ++r) {
      double s = mean.empty() ? 0.0 : mean[r];
      const double* ar = a.row(r);
      for (int c = 0; c < a.cols(); ++c) s += ar[c] * zi[c];
      oi[r] = s;
    }
  }
  return out;
}

}  // namespace

Matrix sample_gaussian(Rng& rng, const Vec& mean, const SymMatrix& cov, int n) {
  if (static_cast<int>(mean.size()) != cov.dim())
    throw std::invalid_argument("sample_gaussian: mean/cov dimension mismatch");
  Matrix l = cholesky(cov);
  Matrix z(n, cov.dim());
  fill_standard_normal(rng, z);
  return affine_rows(z, l, mean);
}

Matrix sample_sphere(Rng& rng, int dim, int n) {
  if (dim < 1) throw std::invalid_argument("sample_sphere: dim must be >= 1");
  Matrix u(n, dim);
  for (int i = 0; i < n; ++i) {
    double* row = u.row(i);
    double nrm = 0.0;
    do {
      nrm = 0.0;
      for (int j = 0; j < dim; ++j) {
        row[j] = rng.normal();
        nrm += row[j] * row[j];
      }
      nrm = std::sqrt(nrm);
    } while (nrm == 0.0);
    for (int j = 0; j < dim; ++j) row[j] /= nrm;
  }
  return u;
}

Matrix sample_elliptical(Rng& rng, const EllipticalModel& model, int n) {
  const Matrix& a = model.shape_factor;
  const int p = a.rows(), r = a.cols();
  if (!model.location.empty() && static_cast<int>(model.location.size()) != p)
    throw std::invalid_argument("sample_elliptical: location/shape dimension mismatch");

  Vec xi(n);
  if (std::holds_alternative<EllipticalModel::GaussianImplied>(model.xi_sampler)) {
    // xi = ||Z||, Z ~ N(0, I_r), so xi * U ~ N(0, I_r).
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < r; ++j) {
        double z = rng.normal();
        s += z * z;
      }
      xi[i] = std::sqrt(s);
    }
  } else if (auto* t = std::get_if<EllipticalModel::TImplied>(&model.xi_sampler)) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < r; ++j) {
        double z = rng.normal();
        s += z * z;
      }
      double w = rng.chi_squared(t->dof);
      xi[i] = std::sqrt(s / (w / t->dof));
    }
  } else {
    const auto& custom = std::get<EllipticalModel::CustomXi>(model.xi_sampler);
    if (custom.values.size() < static_cast<size_t>(n))
      throw std::invalid_argument("sample_elliptical: custom xi stream shorter than n");
    for (int i = 0; i < n; ++i) {
      if (custom.values[i] < 0.0)
        throw std::domain_error("sample_elliptical: custom xi stream has a negative value");
      xi[i] = custom.values[i];
    }
  }

  Matrix u = sample_sphere(rng, r, n);
  Matrix out(n, p);
  for (int i = 0; i < n; ++i) {
    const double* ui = u.row(i);
    double* oi = out.row(i);
    for (int row = 0; row < p; ++row) {
      double s = model.location.empty() ? 0.0 : model.location[row];
      const double* ar = a.row(row);
      for (int c = 0; c < r; ++c) s += xi[i] * ar[c] * ui[c];
      oi[row] = s;
    }
  }
  return out;
}

Matrix sample_mvt(Rng& rng, double dof, const Vec& loc, const SymMatrix& scatter, int n) {
  if (!(dof > 0.0)) throw std::invalid_argument("sample_mvt: dof must be positive");
  Matrix g = sample_gaussian(rng, Vec(scatter.dim(), 0.0), scatter, n);
  Matrix out(n, scatter.dim());
  for (int i = 0; i < n; ++i) {
    double w = rng.chi_squared(dof);
    double f = 1.0 / std::sqrt(w / dof);
    for (int j = 0; j < scatter.dim(); ++j)
      out(i, j) = (loc.empty() ? 0.0 : loc[j]) + f * g(i, j);
  }
  return out;
}

namespace {

Matrix sample_component(Rng& rng, const Component& c, int n) {
  switch (c.kind) {
    case Component::Kind::gaussian:
      return sample_gaussian(rng, c.mean, c.cov, n);
    case Component::Kind::mvt:
      return sample_mvt(rng, c.dof, c.mean, c.cov, n);
    case Component::Kind::dirac: {
      Matrix m(n, static_cast<int>(c.mean.size()));
      for (int i = 0; i < n; ++i)
        for (size_t j = 0; j < c.mean.size(); ++j) m(i, static_cast<int>(j)) = c.mean[j];
      return m;
    }
  }
  throw std::logic_error("sample_component: unknown kind");
}

}  // namespace

ContaminatedSample sample_contaminated(Rng& rng, const ContaminationScenario& sc, int n) {
  if (!(sc.epsilon >= 0.0 && sc.epsilon < 1.0))
    throw std::invalid_argument("sample_contaminated: epsilon must lie in [0,1)");
  std::vector<uint8_t> labels(n, 0);
  for (int i = 0; i < n; ++i) labels[i] = (rng.uniform() < sc.epsilon) ? 1 : 0;

  // Draw each component's rows as a block so its stream is contiguous, then
  // interleave by label.
  int n_bad = 0;
  for (uint8_t l : labels) n_bad += l;
  Matrix clean = sample_component(rng, sc.clean, n - n_bad);
  Matrix bad = n_bad > 0 ? sample_component(rng, sc.contaminant, n_bad)
                         : Matrix(0, clean.cols());

  ContaminatedSample out;
  out.labels = labels;
  out.data = Matrix(n, clean.cols());
  int ic = 0, ib = 0;
  for (int i = 0; i < n; ++i) {
    const double* src = labels[i] ? bad.row(ib++) : clean.row(ic++);
    double* dst = out.data.row(i);
    for (int j = 0; j < out.data.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

std::vector<uint64_t> sample_distinct_indices(Rng& rng, uint64_t total, uint64_t count) {
  if (count > total)
    throw std::invalid_argument("sample_distinct_indices: count exceeds population");
  std::vector<uint64_t> picked;
  picked.reserve(count);
  std::unordered_set<uint64_t> seen;
  seen.reserve(count * 2);
  while (picked.size() < count) {
    uint64_t x = rng.uniform_int(total);
    if (seen.insert(x).second) picked.push_back(x);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

namespace {

// Pair index k in [0, n(n-1)/2) -> (i, j) with i < j, lexicographic by i then j.
std::pair<int, int> decode_pair(uint64_t k, uint64_t n) {
  // Rows i = 0..n-2 contribute n-1-i pairs each.
  double nd = static_cast<double>(n);
  double id = std::floor(((2.0 * nd - 1.0) - std::sqrt((2.0 * nd - 1.0) * (2.0 * nd - 1.0) -
                                                       8.0 * static_cast<double>(k))) /
                         2.0);
  uint64_t i = static_cast<uint64_t>(std::max(0.0, id));
  auto row_start = [n](uint64_t r) { return r * (n - 1) - r * (r - 1) / 2; };
  while (i > 0 && row_start(i) > k) --i;
  while (row_start(i + 1) <= k) ++i;
  uint64_t j = k - row_start(i) + i + 1;
  return {static_cast<int>(i), static_cast<int>(j)};
}

}  // namespace

Matrix pair_difference_transform(const Matrix& data, Rng& rng, uint64_t max_pairs) {
  const int n = data.rows(), p = data.cols();
  if (n < 2) throw std::domain_error("pair_difference_transform: need at least 2 rows");
  const uint64_t total = static_cast<uint64_t>(n) * (n - 1) / 2;
  const double inv_sqrt2 = 0.7071067811865475244;

  std::vector<uint64_t> idx;
  if (total <= max_pairs) {
    idx.resize(total);
    for (uint64_t k = 0; k < total; ++k) idx[k] = k;
  } else {
    idx = sample_distinct_indices(rng, total, max_pairs);
  }

  Matrix out(static_cast<int>(idx.size()), p);
  for (size_t r = 0; r < idx.size(); ++r) {
    auto [i, j] = decode_pair(idx[r], static_cast<uint64_t>(n));
    const double* xi = data.row(i);
    const double* xj = data.row(j);
    double* o = out.row(static_cast<int>(r));
    for (int c = 0; c < p; ++c) o[c] = (xi[c] - xj[c]) * inv_sqrt2;
  }
  return out;
}

void write_csv(const Matrix& data, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  for (int j = 0; j < data.cols(); ++j) f << (j ? ",x" : "x") << j;
  f << "\n";
  char buf[64];
  for (int i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < data.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), data(i, j));
      (void)ec;
      if (j) f << ',';
      f.write(buf, ptr - buf);
    }
    f << "\n";
  }
}

}  // namespace scatter
