#pragma once

// Counter-based random streams. Every draw is a pure function of (seed, index),
// so results never depend on thread scheduling or iteration order.

#include <cmath>
#include <cstdint>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace lsmix {

/// Identifier written into run metadata; the determinism contract binds (algorithm, seed).
inline constexpr const char* kRngAlgorithm = "splitmix64-counter/inverse-cdf-normal";

class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// The index-th output of the stream; identical to calling next() index+1 times.
  constexpr std::uint64_t at(std::uint64_t index) const noexcept {
    return mix(seed_ + (index + 1) * kGamma);
  }

  constexpr std::uint64_t next() noexcept { return at(counter_++); }

  /// Uniform on the open interval (0, 1): midpoints of a 2^-52 grid, so both ends stay excluded.
  static constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
  }

  double uniform() noexcept { return to_open_unit(next()); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal();

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Standard normal quantile, accurate to a few ulps over (0, 1).
inline double normal_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double SplitMix64::normal() { return normal_quantile(uniform()); }

/// Stable 64-bit seed for a sub-stream keyed by up to three integers.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) noexcept {
  std::uint64_t h = SplitMix64::mix(base ^ 0x6a09e667f3bcc909ULL);
  h = SplitMix64::mix(h ^ (a + SplitMix64::kGamma));
  h = SplitMix64::mix(h ^ (b + 2 * SplitMix64::kGamma));
  h = SplitMix64::mix(h ^ (c + 3 * SplitMix64::kGamma));
  return h;
}

}  // namespace lsmix
