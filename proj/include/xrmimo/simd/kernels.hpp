#pragma once

// Data-parallel inner loops with one scalar reference and per-ISA variants.
// Every variant must agree with the scalar reference (bit-exact for the
// integer kernels, within a few ulps for the floating-point ones).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace xrmimo::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

using cplx = std::complex<double>;

/// y = A x for a row-major rows x cols complex matrix.
using CMatVecFn = void (*)(const cplx* a, std::size_t rows, std::size_t cols,
                           const cplx* x, cplx* y);

/// out[i] = popcount(query ^ base[i]) for 256-bit descriptors stored as four
/// little-endian 64-bit words each.
using Hamming256Fn = void (*)(const std::uint64_t* query, const std::uint64_t* base,
                              std::size_t n, std::uint32_t* out);

struct KernelTable {
  Isa isa;
  CMatVecFn cmatvec;
  Hamming256Fn hamming256;
};

namespace scalar {
void cmatvec(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y);
void hamming256(const std::uint64_t* query, const std::uint64_t* base, std::size_t n,
                std::uint32_t* out);
}  // namespace scalar

namespace avx2 {
void cmatvec(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y);
void hamming256(const std::uint64_t* query, const std::uint64_t* base, std::size_t n,
                std::uint32_t* out);
}  // namespace avx2

}  // namespace xrmimo::simd
