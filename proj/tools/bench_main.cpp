#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scatter/bench.hpp"

namespace {

using namespace scatter;

void guard_desk_scale(const ExperimentSpec& spec, bool full) {
  if (full) return;
  if (spec.n > 20000 || spec.p > 25 || spec.trials > 25)
    throw ConfigError(
        "config exceeds desk scale (n <= 20000, p <= 25, trials <= 25); pass --full to "
        "run it anyway");
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
}

void print_aggregates(const TrialReport& report) {
  for (const AggregateRow& a : report.aggregates) {
    std::cerr << "  " << a.estimator << ": err_op " << format_double(a.mean_err_op) << " (sd "
              << format_double(a.sd_err_op) << ")";
    if (std::isfinite(a.mean_err_loc))
      std::cerr << ", err_loc " << format_double(a.mean_err_loc) << " (sd "
                << format_double(a.sd_err_loc) << ")";
    std::cerr << ", finite trials " << a.finite_trials << "\n";
  }
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    size_t a = tok.find_first_not_of(" \t");
    size_t b = tok.find_last_not_of(" \t");
    if (a == std::string::npos) continue;
    tok = tok.substr(a, b - a + 1);
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("--values: cannot parse number '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError("--values: list is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contaminated scatter estimation benchmark"};
  app.require_subcommand(1);

  std::string config_path, out_path, in_path, axis, values_csv;
  std::string format = "csv";
  bool full = false;

  CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("--config", config_path, "key = value config file")->required();
  run->add_option("--out", out_path, "output path (default stdout)");
  run->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_flag("--full", full, "allow beyond-desk-scale configs");

  CLI::App* sweep = app.add_subcommand("sweep", "rerun a config along one axis");
  sweep->add_option("--config", config_path, "key = value config file")->required();
  sweep->add_option("--axis", axis, "one of n, p, eps, s, v")->required();
  sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
  sweep->add_option("--out", out_path, "output path (default stdout)");
  sweep->add_flag("--full", full, "allow beyond-desk-scale configs");

  app.add_subcommand("check", "run the property checks");

  CLI::App* exp = app.add_subcommand("export", "re-export a JSON report");
  exp->add_option("--in", in_path, "report JSON produced by run --format json")->required();
  exp->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  exp->add_option("--out", out_path, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("run")) {
      ExperimentSpec spec = parse_config_file(config_path);
      guard_desk_scale(spec, full);
      TrialReport report = run_experiment(spec);
      emit(format == "json" ? report_to_json(report) : report_to_csv(report), out_path);
      std::cerr << "experiment " << spec.experiment_id << " (" << spec.scenario_label()
                << ", n=" << spec.n << ", p=" << spec.p << ")\n";
      print_aggregates(report);
    } else if (app.got_subcommand("sweep")) {
      ExperimentSpec spec = parse_config_file(config_path);
      guard_desk_scale(spec, full);
      SweepResult result = scaling_sweep(spec, axis, parse_values(values_csv));
      emit(sweep_to_csv(result), out_path);
      for (size_t k = 0; k < result.reports.size(); ++k) {
        std::cerr << result.axis << " = " << format_double(result.values[k]) << "\n";
        print_aggregates(result.reports[k]);
      }
    } else if (app.got_subcommand("check")) {
      PropertyReport report = property_checks();
      for (const PropertyResult& r : report.entries) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name
                  << "  measured=" << format_double(r.measured) << "  bounds=["
                  << format_double(r.lo) << ", " << format_double(r.hi) << "]\n";
      }
      return report.all_pass() ? 0 : 1;
    } else if (app.got_subcommand("export")) {
      std::ifstream f(in_path);
      if (!f) throw ConfigError("cannot open report '" + in_path + "'");
      std::ostringstream ss;
      ss << f.rdbuf();
      TrialReport report = report_from_json(ss.str());
      emit(format == "json" ? report_to_json(report) : report_to_csv(report), out_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
