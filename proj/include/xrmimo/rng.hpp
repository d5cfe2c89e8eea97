#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace xrmimo {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser. Used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable 64-bit FNV-1a hash of a label (study names, purposes).
std::uint64_t hash_label(std::string_view label) noexcept;

/// Seed derivation used everywhere a sub-stream is needed:
///   derive_seed(master, label, a, b) = mix(mix(mix(master ^ fnv(label)) ^ a) ^ b)
/// Independent of call order, so studies may be evaluated in any order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0) noexcept;

inline Rng make_rng(std::uint64_t master, std::string_view label,
                    std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(derive_seed(master, label, a, b));
}

/// Uniform double in [0, 1) with 53 random bits. Unlike
/// std::uniform_real_distribution the bit pattern does not depend on the
/// standard library implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Standard normal via Box-Muller; library-independent for the same reason.
double standard_normal(Rng& rng);

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
std::complex<double> complex_normal(Rng& rng, double variance = 1.0);

}  // namespace xrmimo
