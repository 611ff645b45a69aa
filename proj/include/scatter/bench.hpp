#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "scatter/distributions.hpp"
#include "scatter/estimator.hpp"
#include "scatter/matrix.hpp"
#include "scatter/scoring.hpp"

namespace scatter {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContaminantSpec {
  enum class Kind { none, gaussian, dirac, student_t };
  Kind kind = Kind::none;
  double mu = 0.0;     // gaussian / student_t location, times the all-ones vector
  double var_c = 1.0;  // gaussian / student_t covariance multiple of I
  double shift_s = 0.0;  // dirac point, times the all-ones vector
  double dof = 3.0;      // student_t degrees of freedom

  std::string canonical() const;
};
ContaminantSpec parse_contaminant(const std::string& text);

struct ExperimentSpec {
  std::string experiment_id = "exp";
  std::string family = "gaussian";  // "gaussian" or "t(v)"
  std::string sigma = "identity";   // "identity" or "ar"
  double theta = 0.0;               // location is theta times the all-ones vector
  double eps = 0.0;
  std::string contaminant = "none";
  int n = 2000;
  int p = 5;
  std::string estimators = "sample_cov,kendall,tyler,g1_js";
  int trials = 5;
  uint64_t master_seed = 1;

  // Optional overrides for the GAN trainer; zero means "use the desk default".
  int gan_epochs = 0;
  int gan_batch = 0;
  int gan_kd = 0;
  int gan_kg = 0;
  int gan_t0 = 0;
  int gan_t1 = 0;
  double gan_gamma_d = 0.0;
  double gan_gamma_g = 0.0;
  double gan_decay_alpha = 0.0;
  double gan_sigma1 = 0.0;
  uint64_t pair_budget = 2'000'000;

  double family_dof() const;  // 0 when family == "gaussian"
  std::string scenario_label() const;
};

ExperimentSpec parse_config_text(const std::string& text);
ExperimentSpec parse_config_file(const std::string& path);
void validate_spec(const ExperimentSpec& spec);

struct EstimatorSpec {
  enum class Kind { sample_cov, kendall, tyler, gan };
  Kind kind = Kind::sample_cov;
  std::string name;
  GeneratorPreset::Kind gen_kind = GeneratorPreset::Kind::g1;
  bool pair_diff = false;
  ScoringRule score = ScoringRule::log_score();
};
EstimatorSpec parse_estimator_name(const std::string& name);
std::vector<EstimatorSpec> parse_estimator_list(const std::string& csv);

SymMatrix make_true_sigma(const ExperimentSpec& spec);
ContaminationScenario make_scenario(const ExperimentSpec& spec);
TrainConfig desk_train_config(const ExperimentSpec& spec, const EstimatorSpec& est);

struct TrialRow {
  std::string experiment_id;
  int trial = 0;
  std::string estimator;
  int p = 0;
  int n = 0;
  double eps = 0.0;
  std::string scenario;
  double err_op = 0.0;
  double err_loc = 0.0;  // NaN for estimators without a location output
  double seconds = 0.0;
};

struct AggregateRow {
  std::string experiment_id;
  std::string estimator;
  double mean_err_op = 0.0;
  double sd_err_op = 0.0;
  double mean_err_loc = 0.0;
  double sd_err_loc = 0.0;
  int finite_trials = 0;
};

struct TrialReport {
  std::vector<TrialRow> rows;
  std::vector<AggregateRow> aggregates;
};

std::vector<AggregateRow> aggregate_rows(const std::vector<TrialRow>& rows);
TrialReport run_experiment(const ExperimentSpec& spec);

struct SweepResult {
  std::string axis;
  std::vector<double> values;
  std::vector<TrialReport> reports;
};
SweepResult scaling_sweep(const ExperimentSpec& base, const std::string& axis,
                          const std::vector<double>& values);

struct PropertyResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
struct PropertyReport {
  std::vector<PropertyResult> entries;
  bool all_pass() const;
};

PropertyResult check_gradients(int seeds = 20);
PropertyResult check_flat_landscape(int mc_n = 200'000, int ascent_steps = 200);
PropertyResult check_t2_minimizer(int mc_n = 400'000);
PropertyResult check_sigmoid_half(int mc_n = 200'000);
PropertyResult check_relu_moment(int mc_n = 200'000);
PropertyResult check_calibration(int mc_n = 1'000'000);
PropertyReport property_checks();

std::string report_to_csv(const TrialReport& report);
std::string report_to_json(const TrialReport& report);
TrialReport report_from_json(const std::string& json_text);
std::string sweep_to_csv(const SweepResult& sweep);
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& text);
int bench_thread_cap();

}  // namespace scatter
