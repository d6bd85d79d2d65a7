#pragma once

#include <cstdint>
#include <random>

namespace lorprod {

/**
 * Seeded RNG wrapper with explicit, implementation-independent scaling so the
 * same seed reproduces the same draws on any platform.
 */
struct Rng {
  std::mt19937_64 eng;

  explicit Rng(std::uint64_t seed) : eng(seed) {}

  // Uniform in [0, 1).
  double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Uniform integer in [0, n).
  int index(int n) { return static_cast<int>(eng() % static_cast<std::uint64_t>(n)); }
};

}  // namespace lorprod
