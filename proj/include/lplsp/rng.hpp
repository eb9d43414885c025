#pragma once

// Deterministic pseudo-random streams for the synthetic-data generators and
// the test fixtures.
//
// Generator: SplitMix64 (Steele/Lea/Vigna). The state advances by the 64-bit
// golden-ratio constant and each output is finalized with two xor-multiply
// rounds, so a stream is a pure function of its starting state. Independent
// streams are derived from (seed, purpose, channel) by chaining the finalizer
// over the three values; see derive_seed below. Every generated artifact is
// therefore byte-stable across platforms and compilers, which plain
// <random> distributions do not guarantee.

#include <cmath>
#include <cstdint>

namespace lplsp {

namespace detail {

inline std::uint64_t splitmix64_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    return detail::splitmix64_finalize(state_);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via the Box-Muller cosine branch. Consumes exactly two
  // uniforms per call so stream alignment does not depend on the values drawn.
  double normal() {
    const double u1 = 1.0 - next_double();  // (0, 1]: keeps log finite
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

private:
  std::uint64_t state_;
};

// Stream derivation: finalize(seed + phi), then fold in purpose and channel
// with one finalizer round each. Distinct triples give uncorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose,
                                 std::uint64_t channel) {
  std::uint64_t s = detail::splitmix64_finalize(seed + 0x9E3779B97F4A7C15ull);
  s = detail::splitmix64_finalize(s ^ (purpose * 0xBF58476D1CE4E5B9ull));
  s = detail::splitmix64_finalize(s ^ (channel * 0x94D049BB133111EBull));
  return s;
}

inline SplitMix64 make_stream(std::uint64_t seed, std::uint64_t purpose,
                              std::uint64_t channel) {
  return SplitMix64(derive_seed(seed, purpose, channel));
}

}  // namespace lplsp
