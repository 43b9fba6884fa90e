#pragma once

#include <cstdint>

#include "rheoflow/grid.hpp"

namespace rheoflow {

/// Counter-based generator: the i-th draw of stream `seed` is
/// splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15), so any draw can be
/// reproduced without replaying the stream. Doubles use the top 53 bits.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  static std::uint64_t mix(std::uint64_t z);
  static std::uint64_t draw(std::uint64_t seed, std::uint64_t counter);

  std::uint64_t next_u64() { return draw(seed_, counter_++); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (consumes two draws).
  double normal();
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// Random real trigonometric polynomial with integer wavevectors |k_a| <= kmax,
/// coefficient amplitude ~ 1/(1+|k|^2), rescaled to the given sup norm.
/// The mean is zero.
ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, int kmax, double sup = 1.0);
/// Divergence-free random field built the same way and Leray-projected.
VectorField random_solenoidal_field(const Grid& g, std::uint64_t seed, int kmax, double sup = 1.0);

}  // namespace rheoflow
