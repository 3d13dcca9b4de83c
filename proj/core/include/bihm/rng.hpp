#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace bihm {

/// xoshiro256++ (Blackman & Vigna), seeded through SplitMix64.
///
/// This is the single random engine used throughout the library. Every
/// stochastic routine takes an `Rng&` explicitly. Independent substreams are
/// obtained with split(): it returns a copy of the current state and then
/// advances *this by 2^128 draws, so successive splits never overlap for any
/// realistic run length. Results are reproducible for a given seed and call
/// sequence; they are not meant to match other implementations bit for bit.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0x853c49e6748fea9bULL);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Advance the state by 2^128 steps.
  void jump();

  /// Return a generator positioned at the current state and jump *this past it.
  Rng split();

  const std::array<std::uint64_t, 4>& state() const { return s_; }
  bool operator==(const Rng&) const = default;

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace bihm
