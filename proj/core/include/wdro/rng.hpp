#pragma once

#include "wdro/types.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace wdro {

/// Identifier echoed in reports so runs can be replayed exactly.
inline constexpr std::string_view kRngFamily = "splitmix64-streams/v1";

/// SplitMix64 (Steele, Lea, Flood 2014). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Seed of the independent stream `index` under `seed`. Streams depend only
/// on (seed, index), never on scheduling.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  SplitMix64 mix(seed ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  mix();
  return mix();
}

inline SplitMix64 make_stream(std::uint64_t seed, std::uint64_t index) noexcept {
  return SplitMix64(stream_seed(seed, index));
}

template <class Engine>
Vector standard_normal_vector(Engine& engine, Index dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(dim);
  for (Index i = 0; i < dim; ++i) out[i] = normal(engine);
  return out;
}

}  // namespace wdro
