// qpm command line: drives the experiment pipeline through the C interface.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "qpm/qpm.h"

namespace {

void log_line(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

int report(qpm_status s) {
  if (s == QPM_OK) return 0;
  std::fprintf(stderr, "qpm: %s: %s\n", qpm_status_name(s), qpm_last_error());
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative predictive monitoring of STL requirements"};
  app.set_version_flag("--version", std::string(qpm_version()));
  app.require_subcommand(1);

  std::string config;
  std::string out = "results";
  std::string seed;
  bool quiet = false;
  app.add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Override the config seed");
  app.add_flag("-q,--quiet", quiet, "Only print errors");

  auto* generate = app.add_subcommand("generate", "Simulate and write train/calibration/test datasets");
  auto* train = app.add_subcommand("train", "Train the quantile regressors");
  auto* calibrate = app.add_subcommand("calibrate", "Compute conformal critical values");
  auto* evaluate = app.add_subcommand("evaluate", "Write metrics and plot data on the test split");
  auto* run_all = app.add_subcommand("run-all", "All stages, plus composition when configured");

  auto* compose = app.add_subcommand("compose", "Monitor a Boolean combination of the properties");
  std::string op = "and", strategy = "union";
  compose->add_option("--op", op, "and, or, not")
      ->check(CLI::IsMember({"and", "or", "not"}))
      ->capture_default_str();
  compose->add_option("--strategy", strategy, "union, recalibrated")
      ->check(CLI::IsMember({"union", "recalibrated"}))
      ->capture_default_str();

  auto* sequential = app.add_subcommand("sequential", "Apply the monitor along one simulated trajectory");
  int length = 0;
  sequential->add_option("--length", length, "Trajectory length (default: config sequential_length)")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  qpm_experiment* exp = nullptr;
  if (qpm_status s = qpm_experiment_open(config.c_str(), out.c_str(), &exp); s != QPM_OK) return report(s);
  if (!quiet) qpm_experiment_set_log(exp, log_line, nullptr);

  qpm_status s = QPM_OK;
  if (!seed.empty()) s = qpm_experiment_set(exp, "seed", seed.c_str());
  if (s == QPM_OK) {
    if (*generate) s = qpm_experiment_run(exp, QPM_STAGE_GENERATE);
    else if (*train) s = qpm_experiment_run(exp, QPM_STAGE_TRAIN);
    else if (*calibrate) s = qpm_experiment_run(exp, QPM_STAGE_CALIBRATE);
    else if (*evaluate) s = qpm_experiment_run(exp, QPM_STAGE_EVALUATE);
    else if (*run_all) s = qpm_experiment_run(exp, QPM_STAGE_RUN_ALL);
    else if (*compose) {
      const qpm_compose_op o = op == "and" ? QPM_OP_AND : op == "or" ? QPM_OP_OR : QPM_OP_NOT;
      s = qpm_experiment_compose(exp, o,
                                 strategy == "union" ? QPM_STRATEGY_UNION : QPM_STRATEGY_RECALIBRATED);
    } else if (*sequential) {
      s = qpm_experiment_sequential(exp, length);
    }
  }
  const int code = report(s);
  qpm_experiment_free(exp);
  return code;
}
