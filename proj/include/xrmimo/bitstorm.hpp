#pragma once

// Uncoded bit-error injection: error count ~ Binomial(n, ber), positions
// uniform without replacement. Bit i of a payload is bit (i % 8) of byte
// i / 8, least significant first.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "xrmimo/rng.hpp"

namespace xrmimo::bitstorm {

struct CorruptionSpec {
  double ber = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t n_bits = 0;

  void validate() const;
};

std::uint64_t sample_error_count(std::uint64_t n_bits, double ber, Rng& rng);

/// k distinct positions in [0, n), ascending. Uniform over all k-subsets.
std::vector<std::uint64_t> sample_positions(std::uint64_t n_bits, std::uint64_t k, Rng& rng);

/// Inverts exactly k distinct bits. Throws std::invalid_argument if k > n.
void flip_bits(std::span<std::uint8_t> payload, std::uint64_t k, Rng& rng);

/// Returns the number of bits flipped (the sampled count).
std::uint64_t corrupt(std::span<std::uint8_t> payload, double ber, Rng& rng);

/// Throws ConfigError when spec.n_bits is not the payload's bit count.
std::uint64_t corrupt(std::span<std::uint8_t> payload, const CorruptionSpec& spec);
std::uint64_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Allowed range of a decoded field.
struct FieldSpec {
  double min = 0.0;
  double max = 0.0;

  double midpoint() const noexcept { return min + 0.5 * (max - min); }
};

/// Non-finite values map to the midpoint; finite values are clamped.
inline double sanitize_field(double raw, const FieldSpec& spec) noexcept {
  if (!std::isfinite(raw)) return spec.midpoint();
  return raw < spec.min ? spec.min : (raw > spec.max ? spec.max : raw);
}

template <typename Int>
Int sanitize_int(Int raw, Int lo, Int hi) noexcept {
  return raw < lo ? lo : (raw > hi ? hi : raw);
}

}  // namespace xrmimo::bitstorm
