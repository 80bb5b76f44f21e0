#pragma once

#include <cstdint>
#include <random>

namespace inertia {

/// Stream ids for the seed-splitting scheme. A subsystem seed is
/// derive_seed(global, stream, index); editing one subsystem's config never
/// moves another subsystem's stream.
enum class SeedStream : std::uint64_t {
  kProbing = 1,
  kNoise = 2,
  kSplit = 3,
  kInit = 4,
  kShuffle = 5,
  kAmbient = 6,
  kBatch = 7,
  kFeatureSelect = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t global, SeedStream stream, std::uint64_t index = 0);

using Rng = std::mt19937_64;

}  // namespace inertia
