#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "qpm/conformal.hpp"
#include "qpm/stl.hpp"

namespace qpm {

enum class ComposeOp { And, Or, Not };
enum class ComposeStrategy { Union, Recalibrated };

std::string_view op_name(ComposeOp op);
ComposeOp parse_op(std::string_view name);
std::string_view strategy_name(ComposeStrategy s);
ComposeStrategy parse_strategy(std::string_view name);

/// Interval for R(not phi) = -R(phi): [-hi, -lo].
PredictionInterval negate(const PredictionInterval& pi);

/// Interval hull of two calibrated intervals, valid for both conjunction and
/// disjunction. Disjoint inputs give the gap-filling hull, not a set union.
PredictionInterval union_monitor(const PredictionInterval& a, const PredictionInterval& b);

/// Componentwise min (conjunction) or max (disjunction) of raw intervals.
PredictionInterval combine_min(const PredictionInterval& a, const PredictionInterval& b);
PredictionInterval combine_max(const PredictionInterval& a, const PredictionInterval& b);

/// Left fold of union_monitor / combine_* over two or more intervals.
PredictionInterval union_all(std::span<const PredictionInterval> pis);
PredictionInterval combine_all(ComposeOp op, std::span<const PredictionInterval> pis);

/// Critical value of the combined raw intervals against composite robustness
/// targets (computed on the same trajectories as the components).
CalibrationResult recalibrate_combined(std::span<const PredictionInterval> combined,
                                       const Dataset& composite_cal, double alpha);

/// The composite formula for `op` over one or two properties.
stl::Formula compose_formula(ComposeOp op, const stl::Formula& a, const stl::Formula* b);

}  // namespace qpm
