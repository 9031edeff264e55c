#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace qpm {

// Counter-based SplitMix64.
//
// Draw i (1-based) of a stream with key k is mix64(k + i * 0x9E3779B97F4A7C15),
// where mix64 is the SplitMix64 finalizer. Streams are addressed by a key
// derived from (seed, path...) through stream_key(), so any trajectory or
// state can be regenerated without replaying the streams before it.
//
// Derived draws:
//   uniform()        (u64 >> 11) * 2^-53, in [0, 1)
//   normal()         Box-Muller cosine branch from two consecutive uniforms,
//                    sqrt(-2 ln(1 - u1)) * cos(2 pi u2); the sine branch is discarded
//   exponential(r)   -ln(1 - u) / r (inversion)

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t k = mix64(seed + kGolden);
  for (std::uint64_t id : path) k = mix64(k ^ mix64(id + 0x632BE59BD9B4E019ULL));
  return k;
}

class Rng {
public:
  explicit constexpr Rng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    return Rng(stream_key(seed, path));
  }

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift; the tiny bias for huge n is irrelevant here.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qpm
