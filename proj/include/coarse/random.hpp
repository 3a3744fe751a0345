#pragma once

#include <cstdint>
#include <random>

namespace coarse {

using Rng = std::mt19937_64;

/// Child stream seeded from two draws of `parent`. Children derived in a fixed
/// order are reproducible and independent of how they are later consumed.
inline Rng derive_stream(Rng& parent) {
  std::seed_seq seq{static_cast<std::uint32_t>(parent()), static_cast<std::uint32_t>(parent()),
                    static_cast<std::uint32_t>(parent()), static_cast<std::uint32_t>(parent())};
  return Rng(seq);
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace coarse
