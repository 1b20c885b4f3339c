#pragma once

#include <cstdint>
#include <random>

namespace rope {

using Rng = std::mt19937_64;

/// Mixes a master seed with stream coordinates into an independent 64-bit
/// seed (splitmix64 finaliser applied per coordinate). Streams derived from
/// distinct coordinates are independent of the order in which they are used,
/// which is what makes parallel schedules reproducible.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

inline Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
  return Rng(derive_seed(seed, a, b, c));
}

}  // namespace rope
