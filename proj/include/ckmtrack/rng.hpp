#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ckmtrack/types.hpp"

namespace ckmtrack {

// splitmix64 finalizer; decorrelates derived seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run,
                                 std::uint64_t purpose) {
  return mix_seed(master ^ mix_seed(run * 0x9e3779b97f4a7c15ull + purpose));
}

/**
 * Deterministic random stream.
 *
 * mt19937_64 core with explicit uniform/Gaussian transforms so the produced
 * sequences do not depend on the standard library's distribution
 * implementations. Every consumer owns its own stream; streams for different
 * purposes are derived with derive_seed so schemes sharing a run see identical
 * trajectories and blockage draws.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller, two uniforms per draw (no cached spare).
  double gaussian(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * kPi * u2);
  }

  // Circularly symmetric complex Gaussian with E|z|^2 = var.
  Complex cgaussian(double var) {
    const double s = std::sqrt(0.5 * var);
    return {gaussian(0.0, s), gaussian(0.0, s)};
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ckmtrack
