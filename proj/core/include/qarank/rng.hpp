#pragma once

#include <cstdint>
#include <random>

namespace qarank {

// Deterministic RNG. Derives floats from raw mt19937_64 output so streams are
// reproducible across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform in [lo, hi) with 53-bit resolution.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  // Uniform index in [0, n). n must be > 0.
  std::size_t index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

private:
  std::mt19937_64 gen_;
};

}  // namespace qarank
