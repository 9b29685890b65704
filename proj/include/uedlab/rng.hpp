#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ued {

/// Seeded generator handle. Wraps mt19937_64 and exposes the few draws the
/// library needs with fully specified (implementation-independent) mappings.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Rejection sampling on the top of the range keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller.
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

/// Independent generator handles derived from one master seed.
struct SeedStreams {
  Rng generation;
  Rng rollout;
  Rng subsample;
  Rng ppo;
  Rng teacher;
};

/// Seed of the named sub-stream. Distinct names map to unrelated seeds.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stream_name);

SeedStreams seed_streams(std::uint64_t master_seed);

}  // namespace ued
