#pragma once

#include <cstdint>
#include <random>

namespace bilgr {

struct RngSeed {
  std::uint64_t value = 0;
};

// std::uniform_*_distribution is implementation-defined; these helpers keep
// seeded streams bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(mix(seed.value)) {}
  explicit Rng(std::uint64_t seed) : Rng(RngSeed{seed}) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), rejection-sampled. n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Splitmix64 finalizer, so adjacent integer seeds give unrelated streams.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bilgr
