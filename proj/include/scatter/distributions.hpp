#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "scatter/matrix.hpp"
#include "scatter/rng.hpp"

namespace scatter {

// Elliptical law X = theta + xi * A * U with U uniform on the unit sphere of
// R^r and xi >= 0 scalar. xi choices: the one implied by N(theta, A A^T), the
// one implied by a multivariate t with dof v, or a caller-supplied stream.
struct EllipticalModel {
  struct GaussianImplied {};
  struct TImplied {
    double dof;
  };
  struct CustomXi {
    std::vector<double> values;  // consumed in order; must be nonnegative
  };

  Vec location;  // theta, size p
  Matrix shape_factor;  // A, p x r
  std::variant<GaussianImplied, TImplied, CustomXi> xi_sampler;

  static EllipticalModel gaussian(Vec theta, Matrix a) {
    return {std::move(theta), std::move(a), GaussianImplied{}};
  }
  static EllipticalModel student_t(Vec theta, Matrix a, double dof) {
    return {std::move(theta), std::move(a), TImplied{dof}};
  }
  static EllipticalModel custom(Vec theta, Matrix a, std::vector<double> xi) {
    return {std::move(theta), std::move(a), CustomXi{std::move(xi)}};
  }
};

// Distribution handle for contamination mixtures: an elliptical component, a
// multivariate t, or a point mass.
struct Component {
  enum class Kind { gaussian, mvt, dirac };
  Kind kind;
  Vec mean;          // gaussian / mvt location, dirac point
  SymMatrix cov;     // gaussian covariance / mvt scatter
  double dof = 0.0;  // mvt only

  static Component gaussian(Vec mean, SymMatrix cov) {
    return {Kind::gaussian, std::move(mean), std::move(cov), 0.0};
  }
  static Component mvt(double dof, Vec loc, SymMatrix scatter) {
    return {Kind::mvt, std::move(loc), std::move(scatter), dof};
  }
  static Component dirac(Vec point) {
    return {Kind::dirac, std::move(point), SymMatrix(), 0.0};
  }
};

struct ContaminationScenario {
  Component clean;
  Component contaminant;
  double epsilon = 0.0;
};

Matrix sample_gaussian(Rng& rng, const Vec& mean, const SymMatrix& cov, int n);

Matrix sample_sphere(Rng& rng, int dim, int n);

Matrix sample_elliptical(Rng& rng, const EllipticalModel& model, int n);

Matrix sample_mvt(Rng& rng, double dof, const Vec& loc, const SymMatrix& scatter, int n);

struct ContaminatedSample {
  Matrix data;
  std::vector<uint8_t> labels;  // 1 = drawn from the contaminant (diagnostics only)
};

ContaminatedSample sample_contaminated(Rng& rng, const ContaminationScenario& sc, int n);

// Rows (X_i - X_j)/sqrt(2) over distinct index pairs; all n(n-1)/2 pairs when
// that count is <= max_pairs, otherwise a uniform subsample without
// replacement. Pair order is canonical (ascending pair index) either way.
Matrix pair_difference_transform(const Matrix& data, Rng& rng, uint64_t max_pairs);

// Draws `count` distinct values from [0, total) uniformly, returned ascending.
std::vector<uint64_t> sample_distinct_indices(Rng& rng, uint64_t total, uint64_t count);

// CSV with header x0..x{p-1}, one row per observation.
void write_csv(const Matrix& data, const std::string& path);

}  // namespace scatter
