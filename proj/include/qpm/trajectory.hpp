#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qpm {

/// Fixed-length discrete-time signal: `length()` states of `dim()` reals each,
/// stored row-major. `dt` is metadata only; all temporal semantics are index based.
class Trajectory {
public:
  Trajectory(std::size_t dim, std::vector<double> values, double dt = 1.0);

  std::size_t length() const noexcept { return values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  double dt() const noexcept { return dt_; }

  std::span<const double> state(std::size_t t) const noexcept {
    return {values_.data() + t * dim_, dim_};
  }
  double at(std::size_t t, std::size_t i) const noexcept { return values_[t * dim_ + i]; }

  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

private:
  std::size_t dim_;
  std::vector<double> values_;
  double dt_;
};

}  // namespace qpm
