#pragma once

#include <cstdint>
#include <random>

namespace csshap {

using Rng = std::mt19937_64;

// SplitMix64 finaliser; used to derive independent per-item streams.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix_seed(mix_seed(base) ^ (index * 0xD1B54A32D192ED03ULL));
}

}  // namespace csshap
