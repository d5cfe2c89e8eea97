#include "xrmimo/bitstorm.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <stdexcept>
#include <string>

#include "xrmimo/errors.hpp"

namespace xrmimo::bitstorm {

void CorruptionSpec::validate() const {
  if (!(ber >= 0.0 && ber <= 1.0)) throw ConfigError("ber must lie in [0, 1]");
}

std::uint64_t sample_error_count(std::uint64_t n_bits, double ber, Rng& rng) {
  if (!(ber >= 0.0 && ber <= 1.0)) throw std::invalid_argument("ber must lie in [0, 1]");
  if (n_bits == 0 || ber == 0.0) return 0;
  if (ber == 1.0) return n_bits;
  std::binomial_distribution<std::uint64_t> dist(n_bits, ber);
  return dist(rng);
}

std::vector<std::uint64_t> sample_positions(std::uint64_t n_bits, std::uint64_t k, Rng& rng) {
  if (k > n_bits)
    throw std::invalid_argument("cannot choose " + std::to_string(k) + " of " + std::to_string(n_bits) + " bits");

  // Floyd's algorithm picks the smaller of {chosen, not chosen}; membership
  // lives in a bitmap so cost stays O(n/64 + k).
  const bool complement = k > n_bits / 2;
  const std::uint64_t draw = complement ? n_bits - k : k;
  std::vector<std::uint64_t> member((n_bits + 63) / 64, 0);
  auto test = [&](std::uint64_t i) { return (member[i >> 6] >> (i & 63)) & 1u; };
  auto set = [&](std::uint64_t i) { member[i >> 6] |= std::uint64_t{1} << (i & 63); };

  for (std::uint64_t j = n_bits - draw; j < n_bits; ++j) {
    const std::uint64_t t = uniform_below(rng, j + 1);
    set(test(t) ? j : t);
  }

  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (std::size_t w = 0; w < member.size(); ++w) {
    std::uint64_t word = complement ? ~member[w] : member[w];
    const std::uint64_t base = std::uint64_t{w} * 64;
    if (base + 64 > n_bits) word &= (std::uint64_t{1} << (n_bits - base)) - 1;
    while (word != 0) {
      out.push_back(base + static_cast<std::uint64_t>(std::countr_zero(word)));
      word &= word - 1;
    }
  }
  return out;
}

void flip_bits(std::span<std::uint8_t> payload, std::uint64_t k, Rng& rng) {
  const std::uint64_t n = std::uint64_t{payload.size()} * 8;
  if (k > n) throw std::invalid_argument("flip count exceeds payload bits");
  if (k == 0) return;
  for (std::uint64_t pos : sample_positions(n, k, rng))
    payload[pos >> 3] ^= static_cast<std::uint8_t>(1u << (pos & 7));
}

std::uint64_t corrupt(std::span<std::uint8_t> payload, double ber, Rng& rng) {
  const std::uint64_t n = std::uint64_t{payload.size()} * 8;
  const std::uint64_t k = sample_error_count(n, ber, rng);
  flip_bits(payload, k, rng);
  return k;
}

std::uint64_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming_distance needs equal lengths");
  std::uint64_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += static_cast<std::uint64_t>(std::popcount<std::uint8_t>(a[i] ^ b[i]));
  return d;
}

std::uint64_t corrupt(std::span<std::uint8_t> payload, const CorruptionSpec& spec) {
  spec.validate();
  if (spec.n_bits != std::uint64_t{payload.size()} * 8)
    throw ConfigError("corruption spec covers " + std::to_string(spec.n_bits) + " bits, payload has " +
                      std::to_string(payload.size() * 8));
  Rng rng(spec.seed);
  return corrupt(payload, spec.ber, rng);
}

}  // namespace xrmimo::bitstorm
