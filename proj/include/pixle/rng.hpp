#pragma once

#include <cstdint>
#include <random>

namespace pixle {

/// The single random stream an attack instance draws from.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer over (seed, index); used to derive per-item streams.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace pixle
