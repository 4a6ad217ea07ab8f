#pragma once

#include <cstdint>
#include <limits>

#include "stathm/lattice.hpp"

namespace stathm {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256** keyed by (seed, stream id). Streams with different ids are
// seeded from decorrelated splitmix64 outputs. Satisfies
// UniformRandomBitGenerator, so it plugs into <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::uint64_t sm = seed;
    const std::uint64_t a = splitmix64(sm);
    std::uint64_t sm2 = stream ^ 0xD1B54A32D192ED03ULL;
    const std::uint64_t b = splitmix64(sm2);
    std::uint64_t mix = a ^ (b * 0xA24BAED4963EE407ULL) ^ (b >> 29);
    for (auto& w : s_) w = splitmix64(mix);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1], never zero.
  double uniform_pos() {
    return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform direction in {0,1,2,3}; consumes two bits per call.
  int direction() {
    if (bits_left_ == 0) {
      bits_ = (*this)();
      bits_left_ = 32;
    }
    const int d = static_cast<int>(bits_ & 3U);
    bits_ >>= 2;
    --bits_left_;
    return d;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
  std::uint64_t bits_ = 0;
  int bits_left_ = 0;
  std::uint64_t seed_;
  std::uint64_t stream_;
};

// One simple-random-walk step: each nearest neighbor with probability 1/4.
inline Site step(RngStream& rng, Site x) { return neighbor(x, rng.direction()); }

}  // namespace stathm
