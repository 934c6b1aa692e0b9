#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace geolift {

// Seeded generator whose derived draws are fully specified here rather than
// delegated to the implementation-defined std:: distributions, so sequences
// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  // Standard normal via Box-Muller (one draw per call, no caching).
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Independent stream derived from this seed and a salt.
  static Rng derive(std::uint64_t seed, std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
};

}  // namespace geolift
