#include "pdmp/random.hpp"

#include <cmath>

namespace pdmp {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// For a fixed seed the map stream -> engine seed is injective because mix64 is
// a bijection and the xor with a seed-only term is a bijection too.
RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix64(stream) ^ mix64(mix64(seed) + 0x632be59bd9b4e019ULL)) {}

double RandomSource::exponential() { return -std::log(uniform()); }

}  // namespace pdmp
