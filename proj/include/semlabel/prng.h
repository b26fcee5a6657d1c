#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace semlabel {

// SplitMix64 (Steele, Lea, Flood). Used to expand seeds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

// xoshiro256** 1.0. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  // State filled with four consecutive SplitMix64 outputs of `seed`.
  explicit Xoshiro256(std::uint64_t seed);
  explicit Xoshiro256(const std::array<std::uint64_t, 4>& state) : s_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return next(); }
  std::uint64_t next();

  // Uniform integer in [0, bound) via the high 64 bits of next() * bound.
  std::uint64_t bounded(std::uint64_t bound);

  // Uniform double in [0, 1) from the top 53 bits.
  double uniform();

  // Standard normal via Box-Muller; consumes two draws per call.
  double gaussian();

 private:
  std::array<std::uint64_t, 4> s_;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Independent stream for (seed, index), e.g. one per simulated frame.
Xoshiro256 derive_stream(std::uint64_t seed, std::uint64_t index);

}  // namespace semlabel
