#pragma once

#include <cstdint>

namespace spacecov {

// SplitMix64 (Steele, Lea & Flood 2014). Chosen as the project-wide seeded
// generator because its output is fully specified by the algorithm, so
// bootstrap intervals and synthetic fixtures reproduce bit-for-bit across
// platforms and standard libraries.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  // Independent substream for (seed, stream_index); replica i of a bootstrap
  // uses stream(seed, i) so results do not depend on execution order.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_index) {
    SplitMix64 g(seed ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1)));
    g.next();
    return g;
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound), unbiased via rejection sampling.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t threshold = (-bound) % bound;
    while (true) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

private:
  std::uint64_t state_;
};

}  // namespace spacecov
