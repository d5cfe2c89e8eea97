// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached through the
// dispatcher after a CPUID check.

#include <immintrin.h>

#include "xrmimo/simd/kernels.hpp"

namespace xrmimo::simd::avx2 {

void cmatvec(const cplx* a, std::size_t rows, std::size_t cols, const cplx* x, cplx* y) {
  const auto* xd = reinterpret_cast<const double*>(x);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto* ad = reinterpret_cast<const double*>(a + r * cols);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t c = 0;
    // Two complex values per register: [re0, im0, re1, im1].
    for (; c + 4 <= cols; c += 4) {
      const __m256d av0 = _mm256_loadu_pd(ad + 2 * c);
      const __m256d xv0 = _mm256_loadu_pd(xd + 2 * c);
      const __m256d av1 = _mm256_loadu_pd(ad + 2 * c + 4);
      const __m256d xv1 = _mm256_loadu_pd(xd + 2 * c + 4);
      const __m256d t0 = _mm256_mul_pd(_mm256_permute_pd(av0, 0x5), _mm256_permute_pd(xv0, 0xF));
      const __m256d t1 = _mm256_mul_pd(_mm256_permute_pd(av1, 0x5), _mm256_permute_pd(xv1, 0xF));
      acc0 = _mm256_add_pd(acc0, _mm256_fmaddsub_pd(av0, _mm256_movedup_pd(xv0), t0));
      acc1 = _mm256_add_pd(acc1, _mm256_fmaddsub_pd(av1, _mm256_movedup_pd(xv1), t1));
    }
    for (; c + 2 <= cols; c += 2) {
      const __m256d av = _mm256_loadu_pd(ad + 2 * c);
      const __m256d xv = _mm256_loadu_pd(xd + 2 * c);
      const __m256d t = _mm256_mul_pd(_mm256_permute_pd(av, 0x5), _mm256_permute_pd(xv, 0xF));
      acc0 = _mm256_add_pd(acc0, _mm256_fmaddsub_pd(av, _mm256_movedup_pd(xv), t));
    }
    const __m256d acc = _mm256_add_pd(acc0, acc1);
    __m128d sum = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
    if (c < cols) {
      const __m128d av = _mm_loadu_pd(ad + 2 * c);
      const __m128d xv = _mm_loadu_pd(xd + 2 * c);
      const __m128d t = _mm_mul_pd(_mm_permute_pd(av, 0x1), _mm_permute_pd(xv, 0x3));
      sum = _mm_add_pd(sum, _mm_fmaddsub_pd(av, _mm_movedup_pd(xv), t));
    }
    _mm_storeu_pd(reinterpret_cast<double*>(y + r), sum);
  }
}

namespace {

inline __m256i popcount_bytes(__m256i v) {
  const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                       0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
  return _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
}

}  // namespace

void hamming256(const std::uint64_t* query, const std::uint64_t* base, std::size_t n,
                std::uint32_t* out) {
  const __m256i q = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(query));
  const __m256i zero = _mm256_setzero_si256();
  std::size_t i = 0;
  // Four descriptors per iteration; byte counts are reduced with SAD, which
  // leaves one partial sum per 64-bit lane.
  for (; i + 4 <= n; i += 4) {
    const auto* p = reinterpret_cast<const __m256i*>(base + 4 * i);
    const __m256i s0 = _mm256_sad_epu8(popcount_bytes(_mm256_xor_si256(q, _mm256_loadu_si256(p + 0))), zero);
    const __m256i s1 = _mm256_sad_epu8(popcount_bytes(_mm256_xor_si256(q, _mm256_loadu_si256(p + 1))), zero);
    const __m256i s2 = _mm256_sad_epu8(popcount_bytes(_mm256_xor_si256(q, _mm256_loadu_si256(p + 2))), zero);
    const __m256i s3 = _mm256_sad_epu8(popcount_bytes(_mm256_xor_si256(q, _mm256_loadu_si256(p + 3))), zero);
    // Pack the four lane sums of each descriptor into one 32-bit total.
    const __m256i s01 = _mm256_add_epi64(_mm256_unpacklo_epi64(s0, s1), _mm256_unpackhi_epi64(s0, s1));
    const __m256i s23 = _mm256_add_epi64(_mm256_unpacklo_epi64(s2, s3), _mm256_unpackhi_epi64(s2, s3));
    // s01 = [d0a, d1a, d0b, d1b], s23 = [d2a, d3a, d2b, d3b]
    const __m256i mixed = _mm256_add_epi64(_mm256_permute2x128_si256(s01, s23, 0x20),
                                           _mm256_permute2x128_si256(s01, s23, 0x31));
    // mixed = [d0, d1, d2, d3] as 64-bit lanes
    const __m256i packed = _mm256_permutevar8x32_epi32(mixed, _mm256_setr_epi32(0, 2, 4, 6, 1, 3, 5, 7));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), _mm256_castsi256_si128(packed));
  }
  for (; i < n; ++i) {
    const __m256i d = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(base + 4 * i));
    const __m256i s = _mm256_sad_epu8(popcount_bytes(_mm256_xor_si256(q, d)), zero);
    out[i] = static_cast<std::uint32_t>(_mm256_extract_epi64(s, 0) + _mm256_extract_epi64(s, 1) +
                                        _mm256_extract_epi64(s, 2) + _mm256_extract_epi64(s, 3));
  }
}

}  // namespace xrmimo::simd::avx2
