#include <bit>

#include "xrmimo/simd/kernels.hpp"

namespace xrmimo::simd::scalar {

void cmatvec(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const cplx* row = a + r * cols;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      re += row[c].real() * x[c].real() - row[c].imag() * x[c].imag();
      im += row[c].real() * x[c].imag() + row[c].imag() * x[c].real();
    }
    y[r] = {re, im};
  }
}

void hamming256(const std::uint64_t* query, const std::uint64_t* base, std::size_t n,
                std::uint32_t* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* d = base + 4 * i;
    out[i] = static_cast<std::uint32_t>(
        std::popcount(query[0] ^ d[0]) + std::popcount(query[1] ^ d[1]) +
        std::popcount(query[2] ^ d[2]) + std::popcount(query[3] ^ d[3]));
  }
}

}  // namespace xrmimo::simd::scalar
