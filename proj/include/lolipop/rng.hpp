#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace lolipop {

// SplitMix64 (Steele/Lea/Flood; Vigna's public-domain reference code).
// Integer-only arithmetic, so sequences are identical across platforms.
// Per-stream state is drawn from a SplitMix64 walk over the master seed
// (the seeding procedure recommended for the xoshiro family), so distinct
// streams never share a draw sequence and adding draws to one consumer
// cannot shift another's.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {
    // Stream origin = the (stream+1)-th output of a SplitMix64 walk over
    // the master seed.
    std::uint64_t s = seed;
    for (std::uint64_t i = 0; i <= stream; ++i) state_ = advance(s);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() { return advance(state_); }

  // Uniform on [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as input to log().
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Categorical sample by CDF scan; probs must sum to ~1.
  int next_categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("empty distribution");
    const double u = next_double();
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
  }

 private:
  static std::uint64_t advance(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_ = 0;
};

}  // namespace lolipop
