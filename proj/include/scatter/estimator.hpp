#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scatter/distributions.hpp"
#include "scatter/matrix.hpp"
#include "scatter/nets.hpp"
#include "scatter/rng.hpp"
#include "scatter/scoring.hpp"

namespace scatter {

struct TrainConfig {
  double gamma_d = 0.2;
  double gamma_g = 0.4;
  int batch_m = 500;
  int kd = 12;
  int kg = 3;
  int epochs_t = 200;
  int avg_window_t0 = 25;
  double decay_alpha = 0.2;
  int decay_period_t1 = 150;
  double sigma1 = 0.05;
  ScoringRule score = ScoringRule::log_score();
  DiscriminatorPreset discriminator = DiscriminatorPreset::practical(1);  // p overridden by data
  GeneratorPreset::Kind gen_kind = GeneratorPreset::Kind::g1;
  GeneratorPreset::Base gen_base = GeneratorPreset::Base::gaussian;
  double gen_t_dof = 0.0;
  bool freeze_scatter = false;       // keep A fixed; theta / xi still train
  Matrix init_a;                     // nonempty: overrides the Kendall init
  uint64_t kendall_pair_budget = 2'000'000;
  int trace_full_every = 10;         // full-data objective refresh cadence
};

struct TraceRow {
  int epoch;
  double objective;
  double scatter_opnorm;
};

struct EstimationResult {
  SymMatrix scatter_hat;
  Vec location_hat;                 // zeros for g1/g2
  double calibration_factor = 1.0;  // multiplies scatter_hat when applied
  std::vector<TraceRow> trace;
  GeneratorPreset generator;        // trained state, used for calibration
  MlpNet discriminator;
};

struct CheckpointOptions {
  std::string save_path;    // empty = no checkpointing
  int every = 0;            // epochs between saves (0 = only explicit resume)
  std::string resume_path;  // empty = fresh start
};

// Scaled Kendall's tau with eigenvalues clamped to >= 1e-6, the default
// scatter initializer for training.
SymMatrix kendall_init(const Matrix& data, Rng& rng, uint64_t pair_budget = 2'000'000);

// Alternating minimax training: per epoch, kd discriminator ascent steps on
// the two-term score objective, then kg generator descent steps on the fake
// term, with learning-rate decay every decay_period_t1 epochs. Returns the
// tail average of A_t A_t^T over the last avg_window_t0 epochs.
EstimationResult train(const Matrix& data, const TrainConfig& cfg, Rng& rng,
                       const CheckpointOptions& ck = {});

// train with a location-bearing generator (g3/g4); location_hat is the tail
// average of theta_t.
EstimationResult train_joint(const Matrix& data, const TrainConfig& cfg, Rng& rng,
                             const CheckpointOptions& ck = {});

// Pair-difference preprocessing (removes an unknown location) followed by
// train with a centered generator (g1/g2).
EstimationResult train_ustat(const Matrix& data, const TrainConfig& cfg, Rng& rng,
                             uint64_t pair_budget, const CheckpointOptions& ck = {});

// mean S(T(x),1) over real rows + mean S(T(x),0) over fake rows, with T
// clamped away from {0,1}. zero_one uses its value-only path.
double objective_estimate(const MlpNet& discriminator, const ScoringRule& score,
                          const Matrix& real_batch, const Matrix& fake_batch);

struct CalibrationTarget {
  enum class Kind { gaussian, student_t };
  Kind kind = Kind::gaussian;
  double dof = 0.0;

  static CalibrationTarget gaussian() { return {Kind::gaussian, 0.0}; }
  static CalibrationTarget student_t(double dof) { return {Kind::student_t, dof}; }
};

// E min(|X|, 1) for the target's 1-D standard law.
double clipped_moment_rhs(const CalibrationTarget& target);

// Solves E min(|a xi u^T U|, 1) = clipped_moment_rhs(target) for a > 0 by
// Monte Carlo and bisection over [1e-4, 1e4]; xi_draw supplies radial draws
// and U is uniform on the unit sphere of R^sphere_dim. The calibrated scatter
// is a^-2 A A^T.
double calibrate_elliptical(const std::function<double(Rng&)>& xi_draw, int sphere_dim, Rng& rng,
                            const CalibrationTarget& target, int mc_n = 1'000'000);

// Convenience overload drawing xi = |xi_net(z)|, z ~ N(0, I_q).
double calibrate_elliptical(const MlpNet& xi_net, int sphere_dim, Rng& rng,
                            const CalibrationTarget& target, int mc_n = 1'000'000);

// Learning-rate decay factor in force after `completed_epochs` epochs.
double decay_factor(int completed_epochs, double alpha, int period);

// Quantile of the univariate student t (numeric inversion).
double student_t_quantile(double dof, double prob);

}  // namespace scatter
