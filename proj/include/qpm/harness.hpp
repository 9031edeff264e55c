#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qpm/compose.hpp"
#include "qpm/conformal.hpp"
#include "qpm/datagen.hpp"
#include "qpm/eval.hpp"
#include "qpm/keyvalue.hpp"
#include "qpm/processes.hpp"
#include "qpm/qr.hpp"
#include "qpm/stl.hpp"

namespace qpm {

/// Experiment configuration, read from a flat `key = value` file.
///
///   model             aad | ht | mrh<h> | grn<h>            (required)
///   model_params      parameter file, relative to the config file
///   param.<key>       inline override of one model parameter
///   property          STL text; default: the model's first requirement
///   property2         optional second property, enables and/or composition
///   compose_op        and | or | not, composed by run-all (default and with property2)
///   alpha             0.1
///   n_train n_cal n_test m m_test
///                     1000 n, 500 n, 100 n, 50, 500 with n the model's size dimension
///   epochs learning_rate batch_size dropout
///                     500, 5e-4, 512, 0.1
///   seed              0
///   plot_states       40
///   sequential_length 20
struct ExperimentConfig {
  std::string model;
  KeyValueFile model_params;
  std::vector<std::string> properties;
  std::optional<ComposeOp> compose_op;
  double alpha = 0.1;
  std::size_t n_train = 0, n_cal = 0, n_test = 0, m = 50, m_test = 500;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::size_t plot_states = 40;
  int sequential_length = 20;

  /// Unset sizes follow the size rules of the chosen model.
  static ExperimentConfig from_kv(const KeyValueFile& kv,
                                  const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Every effective setting, model parameters included, in config-file form.
  std::string resolved_text() const;
};

using Logger = std::function<void(std::string_view)>;

/// One experiment rooted at an output directory. Stages read their inputs from
/// and write their artifacts to that directory, so they can run separately.
class Experiment {
public:
  Experiment(ExperimentConfig cfg, std::filesystem::path out_dir, Logger log = {});

  const ExperimentConfig& config() const noexcept { return cfg_; }
  const ProcessModel& model() const noexcept { return *model_; }
  const std::filesystem::path& out_dir() const noexcept { return out_; }
  std::size_t property_count() const noexcept { return phis_.size(); }

  void generate();
  void train();
  void calibrate();
  void evaluate();
  void compose(ComposeOp op, ComposeStrategy strategy);
  void sequential(int length);
  /// generate, train, calibrate, evaluate, then both composition strategies
  /// when a composition is configured.
  void run_all();

  // artifact locations
  std::filesystem::path dataset_path(Split split, std::string_view tag) const;
  std::filesystem::path model_path(std::size_t k) const;
  std::filesystem::path calibration_path(std::string_view tag) const;
  std::filesystem::path metrics_path() const { return out_ / "metrics.csv"; }
  std::filesystem::path plot_path(std::size_t k) const;
  std::filesystem::path compose_path(ComposeOp op, ComposeStrategy s) const;
  std::filesystem::path sequential_path() const { return out_ / "sequential.csv"; }

  static std::string property_tag(std::size_t k) { return "p" + std::to_string(k + 1); }

private:
  struct Monitor {
    QRModel model;
    CalibrationResult cal;
  };

  template <class Fn>
  void stage(std::string_view name, Fn&& fn);
  void info(const std::string& msg) const;
  Monitor load_monitor(std::size_t k) const;
  std::vector<ComposeOp> composite_ops() const;

  ExperimentConfig cfg_;
  std::filesystem::path out_;
  Logger log_;
  std::unique_ptr<ProcessModel> model_;
  std::vector<stl::Formula> phis_;
};

}  // namespace qpm
