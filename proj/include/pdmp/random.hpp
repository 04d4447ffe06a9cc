#pragma once

#include <cstdint>
#include <random>

namespace pdmp {

/// Reproducible stream of uniform variates identified by (seed, stream).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Conversions to floating point are done here rather than through
/// <random> distributions, whose algorithms are implementation-defined, so
/// identical (seed, stream) pairs give identical variates on every platform.
class RandomSource {
 public:
  RandomSource(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unit-rate exponential by inversion.
  double exponential();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Bijective 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace pdmp
