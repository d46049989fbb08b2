#pragma once

// Splittable random streams for the simulators. Every trial draws from its own
// xoshiro256** stream keyed by (seed, trial index), so results do not depend
// on how trials are sharded across chunks or threads.

#include <cmath>
#include <cstdint>
#include <limits>

namespace optstop {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  /// Independent substream for item `index` of the run seeded with `seed`.
  static RandomStream for_item(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t mix = seed;
    const std::uint64_t base = splitmix64(mix);
    std::uint64_t keyed = base ^ (index * 0xd1b54a32d192ed03ULL);
    return RandomStream(splitmix64(keyed));
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

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Poisson variate by sequential inversion. Meant for small means (<= ~10).
  std::uint32_t poisson_small(double mean) {
    const double u = uniform();
    double pmf = std::exp(-mean);
    double cdf = pmf;
    std::uint32_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      pmf *= mean / k;
      cdf += pmf;
    }
    return k;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
};

}  // namespace optstop
