#pragma once

#include <cmath>
#include <cstdint>

// Deterministic, counter-based randomness.
//
// Every random quantity in the library is a pure function of a 64-bit seed
// plus a handful of counters (iteration, coordinate, trial...).  This makes
// outputs reproducible bit-for-bit regardless of how work is split across
// threads: a worker evaluating coordinate i always computes the same value,
// no matter which thread it runs on or in which order.

namespace mdbgp::rng {

// splitmix64 finalizer (Steele, Lea & Flood; public domain reference
// implementation).  A fixed, published mixer so hashed outputs are stable
// across platforms and versions.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Full splitmix64 step: advance by the golden-ratio increment, then mix.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  return mix64(x + 0x9E3779B97F4A7C15ULL);
}

// Collapse (seed, a, b, c) into one well-mixed 64-bit word.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

// Map a 64-bit word to a double in [0, 1): top 53 bits as the mantissa.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform [0,1) draw addressed by counters; pure function of its arguments.
inline double counter_uniform(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  return to_unit(derive(seed, a, b, c));
}

// Standard normal draw addressed by counters (Box–Muller, cosine branch).
inline double counter_gaussian(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b = 0, std::uint64_t c = 0) {
  const std::uint64_t h = derive(seed, a, b, c);
  // Two independent 32-bit halves -> two uniforms.  u1 is kept away from 0
  // so the logarithm is finite.
  const double u1 =
      (static_cast<double>(h >> 32) + 0.5) * 0x1.0p-32;  // (0, 1)
  const double u2 =
      static_cast<double>(h & 0xFFFFFFFFULL) * 0x1.0p-32;  // [0, 1)
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace mdbgp::rng
