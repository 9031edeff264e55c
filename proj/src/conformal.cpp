#include "qpm/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "qpm/error.hpp"
#include "qpm/keyvalue.hpp"
#include "qpm/quantile.hpp"

namespace qpm {

namespace {

constexpr std::string_view kMagic = "# qpm-calibration v1";

}  // namespace

double nonconformity_score(double lo, double hi, double y) { return std::max(lo - y, y - hi); }

std::vector<double> nonconformity_scores(std::span<const PredictionInterval> intervals,
                                         const Dataset& cal_set) {
  if (intervals.size() != cal_set.size())
    throw InvalidArgument("nonconformity_scores: one interval per calibration record required");
  std::vector<double> scores;
  scores.reserve(cal_set.size() * cal_set.samples_per_state());
  for (std::size_t i = 0; i < cal_set.size(); ++i)
    for (double y : cal_set.records[i].robustness)
      scores.push_back(nonconformity_score(intervals[i].lo, intervals[i].hi, y));
  return scores;
}

std::vector<double> nonconformity_scores(const QRModel& model, const Dataset& cal_set) {
  const auto q = predict_quantiles(model, cal_set);
  std::vector<PredictionInterval> pis;
  pis.reserve(q.size());
  for (const auto& x : q) pis.push_back(to_interval(x));
  return nonconformity_scores(pis, cal_set);
}

double critical_value(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw InvalidArgument("critical_value: no calibration scores");
  if (!(alpha > 0 && alpha < 1)) throw InvalidArgument("critical_value: alpha must lie in (0, 1)");
  const double m = static_cast<double>(scores.size());
  const double level = (1.0 - alpha) * (1.0 + 1.0 / m);
  if (level >= 1.0) return *std::max_element(scores.begin(), scores.end());
  return empirical_quantile(scores, level);
}

PredictionInterval conformalize(const PredictionInterval& pi, double tau, double alpha) {
  PredictionInterval out{pi.lo - tau, pi.hi + tau, true, false, alpha};
  if (out.lo > out.hi) {
    const double mid = 0.5 * (pi.lo + pi.hi);
    out.lo = out.hi = mid;
    out.collapsed = true;
  }
  return out;
}

PredictionInterval to_interval(const Quantiles& q) { return {q.lo, q.hi, false, false, 0.0}; }

CalibrationResult calibrate(std::span<const PredictionInterval> intervals, const Dataset& cal_set,
                            double alpha) {
  CalibrationResult c;
  c.alpha = alpha;
  c.scores = nonconformity_scores(intervals, cal_set);
  c.tau = critical_value(c.scores, alpha);
  c.dataset_hash = cal_set.content_hash();
  return c;
}

CalibrationResult calibrate(const QRModel& model, const Dataset& cal_set) {
  if (cal_set.scaler.dim() > 0 && cal_set.scaler.source_hash() != model.scaler.source_hash())
    throw InvalidArgument("calibrate: calibration split was scaled with a different training split");
  if (cal_set.split == Split::Train) throw InvalidArgument("calibrate: refusing to calibrate on the training split");
  CalibrationResult c;
  c.alpha = model.alpha;
  c.scores = nonconformity_scores(model, cal_set);
  c.tau = critical_value(c.scores, c.alpha);
  c.model_hash = model.hash();
  c.dataset_hash = cal_set.content_hash();
  return c;
}

double cp_half_width(std::span<const double> residuals, double alpha) {
  if (residuals.empty()) throw InvalidArgument("cp_half_width: no calibration residuals");
  if (!(alpha > 0 && alpha < 1)) throw InvalidArgument("cp_half_width: alpha must lie in (0, 1)");
  const double m = static_cast<double>(residuals.size());
  const double k = std::floor(alpha * (m + 1.0) + 1e-9 * std::max(1.0, alpha * (m + 1.0)));
  std::vector<double> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t rank = k < 1.0 ? 1 : std::min(sorted.size(), static_cast<std::size_t>(k));
  return sorted[rank - 1];
}

PredictionInterval CpBaseline::interval(double point) const {
  return {point - beta, point + beta, true, false, alpha};
}

CpBaseline fit_cp_baseline(const QRModel& model, const Dataset& cal_set, double alpha) {
  const auto q = predict_quantiles(model, cal_set);
  std::vector<double> residuals;
  residuals.reserve(cal_set.size() * cal_set.samples_per_state());
  for (std::size_t i = 0; i < cal_set.size(); ++i)
    for (double y : cal_set.records[i].robustness) residuals.push_back(std::abs(y - q[i].median));
  return {cp_half_width(residuals, alpha), alpha};
}

std::string format_calibration(const CalibrationResult& c) {
  std::ostringstream out;
  out << kMagic << "\n";
  out << "alpha = " << format_double(c.alpha) << "\n";
  out << "m = " << c.scores.size() << "\n";
  out << "quantile_convention = " << kQuantileConvention << "\n";
  out << "model_hash = " << c.model_hash << "\n";
  out << "dataset_hash = " << c.dataset_hash << "\n";
  out << "tau = " << format_double(c.tau) << "\n";
  out << "scores = [";
  for (std::size_t i = 0; i < c.scores.size(); ++i) out << (i ? ", " : "") << format_double(c.scores[i]);
  out << "]\n";
  return out.str();
}

CalibrationResult parse_calibration(std::string_view text, const std::string& source) {
  if (!text.starts_with(kMagic)) throw FormatError(source + ": not a calibration file");
  const auto kv = KeyValueFile::parse(text, source);
  if (kv.get("quantile_convention") != kQuantileConvention)
    throw FormatError(source + ": calibrated under quantile convention '" + kv.get("quantile_convention") +
                      "', this build uses '" + kQuantileConvention + "'");
  CalibrationResult c;
  c.alpha = kv.number("alpha");
  c.model_hash = kv.get("model_hash");
  c.dataset_hash = kv.get("dataset_hash");
  c.tau = kv.number("tau");
  c.scores = kv.matrix("scores").values;
  if (c.scores.size() != static_cast<std::size_t>(kv.integer("m")))
    throw FormatError(source + ": score count does not match m");
  return c;
}

void save_calibration(const CalibrationResult& c, const std::filesystem::path& path) {
  write_file(path, format_calibration(c));
}

CalibrationResult load_calibration(const std::filesystem::path& path) {
  return parse_calibration(read_file(path), path.string());
}

}  // namespace qpm
