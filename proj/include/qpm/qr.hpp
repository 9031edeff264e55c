#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qpm/datagen.hpp"
#include "qpm/rng.hpp"

namespace qpm {

/// alpha * max(y - yhat, 0) + (1 - alpha) * max(yhat - y, 0).
double pinball_loss(double alpha, double y, double yhat);

/// Quantile levels of the three heads: alpha/2, 0.5, 1 - alpha/2.
std::array<double, 3> quantile_levels(double alpha);

/// Mean of the three pinball losses at the head levels.
double joint_loss(double alpha, double y, const std::array<double, 3>& yhat);

struct Layer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

/// Per hidden layer, a (width x batch) matrix of 0 or 1/(1 - rate) factors.
using DropoutMasks = std::vector<Eigen::MatrixXd>;

/// input -> 20 -> 20 -> 20 -> 3 perceptron with LeakyReLU(0.01) hidden units.
/// Head order is (lo, median, hi). Inputs are columns.
class QRNetwork {
public:
  static constexpr int kHidden = 20;
  static constexpr int kHiddenLayers = 3;
  static constexpr int kHeads = 3;
  static constexpr double kSlope = 0.01;

  QRNetwork() = default;
  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  QRNetwork(std::size_t input_dim, Rng& rng);

  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().w.cols(); }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  /// Raw head outputs, kHeads x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, const DropoutMasks* masks = nullptr) const;

  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> theta);

  DropoutMasks sample_masks(std::size_t batch, double rate, Rng& rng) const;

  friend bool operator==(const QRNetwork& a, const QRNetwork& b);

private:
  std::vector<Layer> layers_;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<Layer> grad;  // same shapes as the network's layers

  std::vector<double> flat() const;
};

/// Mean joint loss over the batch (columns of x, entries of y).
double batch_loss(const QRNetwork& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  double alpha, const DropoutMasks* masks = nullptr);

/// Loss and its gradient w.r.t. every parameter, by reverse-mode differentiation.
/// The pinball subgradient at y == yhat is taken as 0.
LossGradient gradient(const QRNetwork& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      double alpha, const DropoutMasks* masks = nullptr);

struct TrainConfig {
  double learning_rate = 5e-4;
  int epochs = 500;
  std::size_t batch_size = 512;
  double dropout = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct Quantiles {
  double lo = 0.0, median = 0.0, hi = 0.0;
  bool crossed = false;  // raw heads were out of order before sorting
};

/// Trained monitor regressor. Predictions take raw states and return robustness
/// in the property's own units; scaling happens inside.
struct QRModel {
  QRNetwork net;
  double alpha = 0.1;
  Scaler scaler;
  TrainConfig config;
  std::string property;
  std::string train_hash;
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;

  std::size_t state_dim() const noexcept { return net.input_dim(); }
  /// Identity of the checkpoint, over its serialized form.
  std::string hash() const;
};

using TrainLog = std::function<void(int epoch, double loss)>;

/// Each record expands to one training pair per robustness sample. Throws
/// NumericError if the loss becomes non-finite.
QRModel train(const Dataset& train_set, const TrainConfig& cfg, const TrainLog& log = {});

/// Trains on already-scaled pairs (columns of x); used by train() and the synthetic tests.
void fit_network(QRNetwork& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                 const TrainConfig& cfg, double* initial_loss = nullptr,
                 std::vector<double>* epoch_loss = nullptr, const TrainLog& log = {});

/// Sorted (lo, median, hi) with dropout disabled.
Quantiles predict_quantiles(const QRModel& model, std::span<const double> state);
std::vector<Quantiles> predict_quantiles(const QRModel& model, const Dataset& data);

std::string format_model(const QRModel& model);
QRModel parse_model(std::string_view text, const std::string& source = "<string>");
void save_model(const QRModel& model, const std::filesystem::path& path);
QRModel load_model(const std::filesystem::path& path);

}  // namespace qpm
