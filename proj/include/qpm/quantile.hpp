#pragma once

#include <cstddef>
#include <span>

namespace qpm {

// Empirical quantile convention used throughout: for level p over m values,
// the ceil(p * m)-th smallest (1-based), clamped to [1, m]. p * m is rounded
// down when it sits within 1e-9 (relative) of an integer so that products such
// as 0.9 * 10 land on 9 instead of 10.
inline constexpr const char* kQuantileConvention = "ceil-rank-v1";

/// 1-based rank selected for level p over m values.
std::size_t quantile_rank(double p, std::size_t m);

/// The rank-th smallest value (1-based) without modifying the input.
double order_statistic(std::span<const double> values, std::size_t rank);

double empirical_quantile(std::span<const double> values, double p);

}  // namespace qpm
