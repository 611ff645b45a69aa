#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scatter/matrix.hpp"
#include "scatter/rng.hpp"

namespace scatter {

// Threshold constant: Phi(sqrt(beta)) = 3/4, i.e. the median of chi^2_1.
inline constexpr double kDepthBeta = 0.45493642311957185;

struct TylerConfig {
  int max_iter = 200;
  double tol = 1e-8;  // relative Frobenius change between iterates
};

// Tyler's M-estimator, trace-normalized to p at every step.
SymMatrix tyler_m(const Matrix& data, const TylerConfig& cfg = {});

// Kendall's tau correlation with the sine transform and median-of-squares
// diagonal scale, rescaled by 1/median(chi^2_1) so Gaussian data targets Sigma.
SymMatrix scaled_kendall_tau(const Matrix& data, Rng& rng, uint64_t pair_budget = 2'000'000);

// Centered second-moment matrix, divisor n.
SymMatrix sample_covariance(const Matrix& data);

struct DepthConfig1D {
  double beta_const = kDepthBeta;
  std::vector<double> grid;  // candidate variances gamma^2
};

struct Depth1DResult {
  double gamma2_hat;
  std::vector<std::pair<double, double>> profile;  // (gamma^2, depth value)
};

// 1-D matrix-depth objective: the grid minimizer of
// max(freq{x^2 <= beta*g}, freq{x^2 >= beta*g}) over candidate variances g.
Depth1DResult depth_1d(const Vec& data, const DepthConfig1D& cfg);

double median(Vec values);

}  // namespace scatter
