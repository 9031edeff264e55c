#pragma once

#include <span>
#include <string>
#include <vector>

#include "qpm/error.hpp"
#include "qpm/keyvalue.hpp"

namespace qpm::detail {

// Reads `key` as a length-n vector; a scalar broadcasts. Keeps `fallback` when absent.
inline std::vector<double> vector_param(const KeyValueFile& kv, std::string_view key, std::size_t n,
                                        std::vector<double> fallback) {
  if (!kv.has(key)) return fallback;
  const Matrix m = kv.matrix(key);
  if (m.size() == 1) return std::vector<double>(n, m.values[0]);
  if (m.size() != n)
    throw FormatError(kv.source() + ": key '" + std::string(key) + "' needs " + std::to_string(n) +
                      " values, got " + std::to_string(m.size()));
  return m.values;
}

template <std::size_t N>
void fixed_param(const KeyValueFile& kv, std::string_view key, double (&out)[N]) {
  if (!kv.has(key)) return;
  auto v = vector_param(kv, key, N, {});
  for (std::size_t i = 0; i < N; ++i) out[i] = v[i];
}

inline void scalar_param(const KeyValueFile& kv, std::string_view key, double& out) {
  out = kv.number_or(key, out);
}

inline void int_param(const KeyValueFile& kv, std::string_view key, int& out) {
  out = static_cast<int>(kv.integer_or(key, out));
}

inline Matrix row(std::span<const double> values) {
  return Matrix{1, values.size(), {values.begin(), values.end()}};
}

inline std::string fmt_row(std::span<const double> values) { return format_matrix(row(values)); }

}  // namespace qpm::detail
