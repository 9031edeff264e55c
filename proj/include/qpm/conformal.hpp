#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpm/datagen.hpp"
#include "qpm/qr.hpp"

namespace qpm {

struct PredictionInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool calibrated = false;
  bool collapsed = false;  // conformalization inverted the bounds; lo == hi at the midpoint
  double alpha = 0.0;      // significance level of the calibration, 0 when uncalibrated

  double width() const noexcept { return hi - lo; }
  bool contains(double y) const noexcept { return lo <= y && y <= hi; }

  friend bool operator==(const PredictionInterval&, const PredictionInterval&) = default;
};

struct CalibrationResult {
  double tau = 0.0;
  double alpha = 0.1;
  std::vector<double> scores;
  std::string model_hash;    // monitor the scores were computed for
  std::string dataset_hash;  // calibration split

  std::size_t size() const noexcept { return scores.size(); }
};

/// max(lo - y, y - hi): negative inside the interval, positive outside.
double nonconformity_score(double lo, double hi, double y);

/// One score per (record, robustness sample), record-major. `intervals` holds
/// one uncalibrated interval per record.
std::vector<double> nonconformity_scores(std::span<const PredictionInterval> intervals,
                                         const Dataset& cal_set);
std::vector<double> nonconformity_scores(const QRModel& model, const Dataset& cal_set);

/// Empirical quantile of the scores at level (1 - alpha)(1 + 1/m); the maximum
/// score when that level exceeds 1.
double critical_value(std::span<const double> scores, double alpha);

/// [lo - tau, hi + tau], or the midpoint with `collapsed` set when tau inverts it.
PredictionInterval conformalize(const PredictionInterval& pi, double tau, double alpha);

PredictionInterval to_interval(const Quantiles& q);

CalibrationResult calibrate(const QRModel& model, const Dataset& cal_set);
CalibrationResult calibrate(std::span<const PredictionInterval> intervals, const Dataset& cal_set,
                            double alpha);

/// Conformal prediction for regression around a point predictor: the
/// floor(alpha (m + 1))-th largest absolute residual (the largest one when that
/// rank is 0), giving the same half-width at every input.
double cp_half_width(std::span<const double> residuals, double alpha);

struct CpBaseline {
  double beta = 0.0;
  double alpha = 0.1;

  PredictionInterval interval(double point) const;
};

/// Uses the median head of `model` as the point predictor.
CpBaseline fit_cp_baseline(const QRModel& model, const Dataset& cal_set, double alpha);

std::string format_calibration(const CalibrationResult& c);
CalibrationResult parse_calibration(std::string_view text, const std::string& source = "<string>");
void save_calibration(const CalibrationResult& c, const std::filesystem::path& path);
CalibrationResult load_calibration(const std::filesystem::path& path);

}  // namespace qpm
