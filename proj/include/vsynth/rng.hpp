#pragma once

#include <cstdint>
#include <random>

namespace vsynth {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based stream derivation: the child seed depends only on (seed, index), never on
/// how many other streams were drawn before it.
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Stream tags for the stages of one sample.
enum class Stream : std::uint64_t { tree = 1, image = 2 };

inline Rng make_rng(std::uint64_t seed, Stream stage) {
  return make_rng(split_seed(seed, static_cast<std::uint64_t>(stage)));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace vsynth
