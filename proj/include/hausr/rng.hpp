#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hausr {

/// Seeded RNG with named substreams. Every source of randomness in the
/// project derives from one root seed plus a stream name ("env",
/// "worker3", "eval/goal17/ep4", ...) so components can be re-seeded
/// independently and runs are reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(scramble(seed)) {}

  static Rng substream(std::uint64_t root_seed, std::string_view name);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>((static_cast<__uint128_t>(engine_()) * n) >> 64);
  }

  /// Sample an index from an (unnormalized is fine) nonnegative weight vector.
  int categorical(const double* weights, int n);

 private:
  static std::uint64_t scramble(std::uint64_t x);
  std::mt19937_64 engine_;
};

}  // namespace hausr
