#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace pyramidai {

/// SplitMix64: a tiny seedable generator satisfying
/// UniformRandomBitGenerator. Cheap to construct, so it is used for
/// per-tile streams keyed by a hash of (seed, coordinates).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Order-sensitive hash of several words into one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> words) {
  SplitMix64 g(seed);
  std::uint64_t h = g();
  for (std::uint64_t w : words) {
    SplitMix64 step(h ^ w);
    h = step();
  }
  return h;
}

template <typename... Words>
std::uint64_t mix_seed(std::uint64_t seed, Words... words) {
  return mix_seed(seed, {static_cast<std::uint64_t>(words)...});
}

}  // namespace pyramidai
