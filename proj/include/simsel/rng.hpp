#pragma once

#include <cstdint>

namespace simsel {

// SplitMix64 finalizer; a stateless counter-based generator when fed
// (seed, counter) pairs.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(seed ^ splitmix64(counter));
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace simsel
