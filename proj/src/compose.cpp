#include "qpm/compose.hpp"

#include <algorithm>
#include <string>

#include "qpm/error.hpp"

namespace qpm {

std::string_view op_name(ComposeOp op) {
  switch (op) {
    case ComposeOp::And: return "and";
    case ComposeOp::Or: return "or";
    case ComposeOp::Not: return "not";
  }
  return "?";
}

ComposeOp parse_op(std::string_view name) {
  if (name == "and") return ComposeOp::And;
  if (name == "or") return ComposeOp::Or;
  if (name == "not") return ComposeOp::Not;
  throw InvalidArgument("unknown composition '" + std::string(name) + "' (expected and, or, not)");
}

std::string_view strategy_name(ComposeStrategy s) {
  return s == ComposeStrategy::Union ? "union" : "recalibrated";
}

ComposeStrategy parse_strategy(std::string_view name) {
  if (name == "union") return ComposeStrategy::Union;
  if (name == "recalibrated" || name == "min" || name == "max") return ComposeStrategy::Recalibrated;
  throw InvalidArgument("unknown strategy '" + std::string(name) + "' (expected union, recalibrated)");
}

PredictionInterval negate(const PredictionInterval& pi) {
  PredictionInterval out = pi;
  out.lo = -pi.hi;
  out.hi = -pi.lo;
  return out;
}

PredictionInterval union_monitor(const PredictionInterval& a, const PredictionInterval& b) {
  if (a.alpha != b.alpha)
    throw InvalidArgument("union_monitor: intervals calibrated at different alpha (" +
                          std::to_string(a.alpha) + " vs " + std::to_string(b.alpha) + ")");
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi), a.calibrated && b.calibrated, false, a.alpha};
}

PredictionInterval combine_min(const PredictionInterval& a, const PredictionInterval& b) {
  return {std::min(a.lo, b.lo), std::min(a.hi, b.hi), false, false, 0.0};
}

PredictionInterval combine_max(const PredictionInterval& a, const PredictionInterval& b) {
  return {std::max(a.lo, b.lo), std::max(a.hi, b.hi), false, false, 0.0};
}

PredictionInterval union_all(std::span<const PredictionInterval> pis) {
  if (pis.empty()) throw InvalidArgument("union_all: no intervals");
  PredictionInterval acc = pis.front();
  for (std::size_t i = 1; i < pis.size(); ++i) acc = union_monitor(acc, pis[i]);
  return acc;
}

PredictionInterval combine_all(ComposeOp op, std::span<const PredictionInterval> pis) {
  if (pis.empty()) throw InvalidArgument("combine_all: no intervals");
  if (op == ComposeOp::Not) {
    if (pis.size() != 1) throw InvalidArgument("combine_all: negation takes one interval");
    return negate(pis.front());
  }
  PredictionInterval acc = pis.front();
  for (std::size_t i = 1; i < pis.size(); ++i)
    acc = op == ComposeOp::And ? combine_min(acc, pis[i]) : combine_max(acc, pis[i]);
  return acc;
}

CalibrationResult recalibrate_combined(std::span<const PredictionInterval> combined,
                                       const Dataset& composite_cal, double alpha) {
  return calibrate(combined, composite_cal, alpha);
}

stl::Formula compose_formula(ComposeOp op, const stl::Formula& a, const stl::Formula* b) {
  switch (op) {
    case ComposeOp::Not: return stl::Formula::negation(a);
    case ComposeOp::And:
    case ComposeOp::Or:
      if (!b) throw InvalidArgument("compose: '" + std::string(op_name(op)) + "' needs two properties");
      return op == ComposeOp::And ? stl::Formula::conjunction(a, *b) : stl::Formula::disjunction(a, *b);
  }
  throw InvalidArgument("compose: unknown operation");
}

}  // namespace qpm
