#include "uedlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace ued {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stream_name) {
  return splitmix64(splitmix64(master_seed) ^ fnv1a64(stream_name));
}

SeedStreams seed_streams(std::uint64_t master_seed) {
  return SeedStreams{Rng(derive_seed(master_seed, "generation")),
                     Rng(derive_seed(master_seed, "rollout")),
                     Rng(derive_seed(master_seed, "subsample")),
                     Rng(derive_seed(master_seed, "ppo")),
                     Rng(derive_seed(master_seed, "teacher"))};
}

}  // namespace ued
