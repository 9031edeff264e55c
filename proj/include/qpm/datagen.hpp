#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpm/processes.hpp"
#include "qpm/stl.hpp"

namespace qpm {

enum class Split { Train, Calibration, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

/// +1 (safe) if the empirical alpha/2 quantile is positive, -1 (unsafe) if the
/// 1 - alpha/2 quantile is negative, 0 (risky) otherwise.
int label_state(std::span<const double> robustness, double alpha);

struct LabeledRecord {
  std::vector<double> state;
  std::vector<double> robustness;
  int label = 0;

  friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

/// Affine map of states and robustness targets onto [-1, 1], fit on a training
/// split. Constant dimensions map to 0 and are flagged degenerate. Values
/// outside the fitted range extend the same affine map (no clipping).
class Scaler {
public:
  Scaler() = default;
  Scaler(std::vector<double> lo, std::vector<double> hi, double target_lo, double target_hi,
         std::string source_hash);

  std::size_t dim() const noexcept { return lo_.size(); }
  const std::vector<double>& lo() const noexcept { return lo_; }
  const std::vector<double>& hi() const noexcept { return hi_; }
  double target_lo() const noexcept { return target_lo_; }
  double target_hi() const noexcept { return target_hi_; }
  bool degenerate(std::size_t i) const { return !(hi_[i] > lo_[i]); }
  bool target_degenerate() const noexcept { return !(target_hi_ > target_lo_); }

  /// Content hash of the training split the scaler was fit on.
  const std::string& source_hash() const noexcept { return source_hash_; }

  double apply(std::size_t i, double x) const;
  double invert(std::size_t i, double z) const;
  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> invert(std::span<const double> z) const;

  double apply_target(double r) const;
  double invert_target(double z) const;
  /// Converts a length in scaled target units back to robustness units.
  double invert_target_length(double dz) const;

  /// Hash over the fitted ranges and the source hash.
  std::string hash() const;

  friend bool operator==(const Scaler&, const Scaler&) = default;

private:
  std::vector<double> lo_, hi_;
  double target_lo_ = 0.0, target_hi_ = 0.0;
  std::string source_hash_;
};

struct Dataset {
  std::string model;
  std::string property;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  Split split = Split::Train;
  std::vector<std::string> var_names;
  std::vector<LabeledRecord> records;
  Scaler scaler;

  std::size_t size() const noexcept { return records.size(); }
  std::size_t state_dim() const { return records.empty() ? 0 : records.front().state.size(); }
  std::size_t samples_per_state() const {
    return records.empty() ? 0 : records.front().robustness.size();
  }

  /// Hash of the record rows only; identifies the split for downstream stages.
  std::string content_hash() const;
};

Scaler fit_scaler(const Dataset& train);

/// Draws `n` states from the model and `m` trajectories per state, and labels
/// every state once per formula. All formulas are evaluated on the same
/// trajectories. Different splits use disjoint random streams.
std::vector<Dataset> generate_datasets(const ProcessModel& model, std::span<const stl::Formula> phis,
                                       std::span<const std::string> property_texts, std::size_t n,
                                       std::size_t m, double alpha, std::uint64_t seed, Split split);

Dataset generate_dataset(const ProcessModel& model, const stl::Formula& phi,
                         const std::string& property_text, std::size_t n, std::size_t m, double alpha,
                         std::uint64_t seed, Split split = Split::Train);

std::string format_dataset(const Dataset& d);
Dataset parse_dataset(std::string_view text, const std::string& source = "<string>");
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace qpm
