// Copyright 2026 The mimicbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mimicbench {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer. Stateless, so any (key, counter) pair maps to a
// reproducible word independent of how the stream got there.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random stream: the i-th output is a pure function of
/// (key, i). Streams can be split into statistically independent children by
/// lane index, which is how per-image and per-trial reproducibility is
/// implemented: the same (seed, epoch, index) path always yields the same
/// draws regardless of evaluation order.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  static RngStream seeded(std::uint64_t seed) {
    return RngStream(detail::mix64(seed + detail::kGolden), 0);
  }

  /// Derives an independent child stream. Children of distinct lanes, and of
  /// distinct parents, do not collide for any practical number of draws.
  RngStream split(std::uint64_t lane) const {
    return RngStream(detail::mix64(key_ ^ detail::mix64((lane + 1) * 0xD605BBB58C8ABBFDull)), 0);
  }

  std::uint64_t next_u64() {
    return detail::mix64(key_ + (++counter_) * detail::kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  /// Uniform integer on [lo, hi], both ends inclusive. Unbiased via bitmask
  /// rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo);
    if (range == 0) return lo;
    std::uint64_t mask = ~0ull >> __builtin_clzll(range | 1);
    std::uint64_t draw;
    do {
      draw = next_u64() & mask;
    } while (draw > range);
    return lo + static_cast<std::int64_t>(draw);
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Standard normal draw (Box-Muller, one value per two uniforms; the
  /// second root is discarded to keep the stream position predictable).
  double normal() {
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  RngStream(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace mimicbench
