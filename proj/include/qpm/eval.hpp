#pragma once

#include <span>
#include <string>
#include <vector>

#include "qpm/conformal.hpp"
#include "qpm/datagen.hpp"

namespace qpm {

enum class Outcome { Correct, Uncertain, Wrong };

struct Classification {
  Outcome outcome = Outcome::Correct;
  bool false_positive = false;
};

/// Sign of an interval: +1 if lo > 0, -1 if hi < 0, 0 otherwise (zero endpoints straddle).
int predicted_sign(const PredictionInterval& pi);

/// correct iff the sign equals the label; uncertain iff the sign is 0 and the
/// label is not; wrong otherwise. A false positive is a +1 prediction for a
/// state labelled 0 or -1.
Classification classify(const PredictionInterval& pi, int label);

struct Metrics {
  double correct = 0.0;  // percentages
  double uncertain = 0.0;
  double wrong = 0.0;
  double false_positive = 0.0;
  double coverage = 0.0;
  double efficiency = 0.0;  // mean interval width
  double eqr_width = 0.0;   // mean empirical quantile-range width

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Percentage of (state, sample) pairs whose robustness lies inside the state's interval.
double coverage(std::span<const PredictionInterval> pis, const Dataset& test);

double efficiency(std::span<const PredictionInterval> pis);

/// Mean width of [q_{alpha/2}, q_{1-alpha/2}] of each state's samples.
double eqr_width(const Dataset& test, double alpha);

Metrics evaluate(std::span<const PredictionInterval> pis, const Dataset& test, double alpha);

/// Column header and row in table order: correct, uncertain, wrong, FP, coverage,
/// efficiency, EQR width. `prefix` columns (e.g. property, method) come first.
std::string metrics_header(std::span<const std::string> prefix_names);
std::string metrics_row(const Metrics& m, std::span<const std::string> prefix);

}  // namespace qpm
