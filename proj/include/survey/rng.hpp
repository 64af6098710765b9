#pragma once

#include <cstdint>
#include <random>

namespace survey {

/// Independent random streams derived from one user seed.
enum class SeedPurpose : std::uint64_t {
  shadowing = 1,
  fading = 2,
  noise = 3,
  planner = 4,
  placement = 5,
  run = 6,
  locations = 7,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Splitting rule: sub = splitmix64(splitmix64(seed) ^ splitmix64(purpose << 32 | index)).
/// Each (purpose, index) pair yields a stream independent of the others, so a
/// component can be reproduced without replaying the rest of the simulation.
constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedPurpose purpose,
                                    std::uint64_t index = 0) {
  const std::uint64_t tag = (static_cast<std::uint64_t>(purpose) << 32) ^ index;
  return splitmix64(splitmix64(seed) ^ splitmix64(tag));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, SeedPurpose purpose, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, purpose, index));
}

}  // namespace survey
