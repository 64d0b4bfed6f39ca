#pragma once

#include <cstdint>
#include <random>

namespace entmap {

/// Reproducible random stream.
///
/// Every stream is a std::mt19937_64 engine whose 64-bit seed is derived
/// from (seed, stream) through SplitMix64 mixing. Identical (seed, stream)
/// pairs yield identical sequences. Independent sub-streams are obtained
/// with split(), which is how experiments hand one stream to each trial and
/// grid cell. Uniform doubles are built from the top 53 bits of the engine
/// output, so the sequence does not depend on the standard library's
/// distribution implementations.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Child stream; does not advance this source.
  RandomSource split(std::uint64_t substream) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace entmap
