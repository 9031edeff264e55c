#include "qpm/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qpm/error.hpp"

namespace qpm {

std::size_t quantile_rank(double p, std::size_t m) {
  if (m == 0) throw InvalidArgument("quantile of an empty sample");
  const double x = p * static_cast<double>(m);
  const double k = std::ceil(x - 1e-9 * std::max(1.0, std::abs(x)));
  if (k < 1.0) return 1;
  if (k >= static_cast<double>(m)) return m;
  return static_cast<std::size_t>(k);
}

double order_statistic(std::span<const double> values, std::size_t rank) {
  if (values.empty()) throw InvalidArgument("order statistic of an empty sample");
  if (rank < 1 || rank > values.size()) throw InvalidArgument("order statistic rank out of range");
  std::vector<double> copy(values.begin(), values.end());
  auto nth = copy.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(copy.begin(), nth, copy.end());
  return *nth;
}

double empirical_quantile(std::span<const double> values, double p) {
  return order_statistic(values, quantile_rank(p, values.size()));
}

}  // namespace qpm
