#pragma once

#include <cstdint>
#include <limits>

namespace cascademix {

/// SplitMix64. Cheap to construct, so every cascade gets its own stream
/// keyed by (seed, index) and parallel generation stays order independent.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
  z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
  return z ^ (z >> 33);
}

/// Substream for item `index` of a run seeded with `seed`.
inline Stream substream(std::uint64_t seed, std::uint64_t index) {
  return Stream(mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

}  // namespace cascademix
