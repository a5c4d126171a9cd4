#pragma once

#include <cstdint>
#include <random>

namespace tradenet {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; turns (master, index) into an independent stream seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix_seed(master ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

// Uniform on (0, 1].
inline double uniform_open_closed(Rng& rng) {
  return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace tradenet
