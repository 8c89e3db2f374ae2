// Deterministic random number utilities.
//
// The Monte Carlo harness promises bit-identical output across runs and
// across serial/parallel execution, so nothing here may depend on
// implementation-defined library behaviour (std::normal_distribution is not
// portable and not even stable across libstdc++ versions).  Two flavours:
//
//  * Xoshiro256++ streams, seeded via splitmix64 — for per-trial choices
//    (payload bytes, attacker bits, carrier phases).
//  * Counter-based Gaussians — noise samples addressed by (seed, index), so a
//    capture can materialise any sub-range of its noise lazily and still
//    agree with a full materialisation sample for sample.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

#include "common.hpp"

namespace hopguard {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 step: advances state, returns a well-mixed 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stateless avalanche of one word (splitmix64 finaliser).
inline std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64(s);
}

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  bool coin() { return (next() >> 63) != 0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Circularly-symmetric complex Gaussian with E|z|^2 = 1, addressed by
// (seed, index).  Box-Muller in polar form: u1 drives the Rayleigh magnitude,
// u2 the phase; re/im come out independent N(0, 1/2).
inline std::complex<double> complex_gaussian(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t base = seed + index * kGolden;
  const std::uint64_t a = mix64(base);
  const std::uint64_t b = mix64(base ^ 0xD2B74407B1CE6E93ull);
  const double u1 = 1.0 - static_cast<double>(a >> 11) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;        // [0, 1)
  const double r = std::sqrt(-std::log(u1));
  const double phi = 6.283185307179586476925286766559 * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

// Per-trial seed.  Derived from the *values* of the cell coordinates (bit
// patterns of the doubles), never from grid indices: removing or reordering
// cells in a sweep must not change any other cell's trials.
inline std::uint64_t derive_trial_seed(std::uint64_t master, double sir_db, double tsy_us,
                                       std::uint64_t trial_index) {
  std::uint64_t h = mix64(master ^ 0x5DEECE66Dull);
  h = mix64(h ^ std::bit_cast<std::uint64_t>(sir_db));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(tsy_us));
  h = mix64(h ^ trial_index);
  return h;
}

}  // namespace hopguard
