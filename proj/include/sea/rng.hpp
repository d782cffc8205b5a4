#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace sea {

// All randomness in the project flows from explicitly seeded engines of this type.
using Rng = std::mt19937_64;

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void set_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
}

// Derives an independent stream seed from a base seed and a stream tag (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace sea
