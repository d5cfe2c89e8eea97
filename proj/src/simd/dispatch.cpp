#include "xrmimo/simd/dispatch.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace xrmimo::simd {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(XRMIMO_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::optional<KernelTable> kernels_for(Isa isa) noexcept {
  if (!isa_available(isa)) return std::nullopt;
  switch (isa) {
    case Isa::Scalar:
      return KernelTable{Isa::Scalar, &scalar::cmatvec, &scalar::hamming256};
    case Isa::Avx2:
#if defined(XRMIMO_HAVE_AVX2_TU)
      return KernelTable{Isa::Avx2, &avx2::cmatvec, &avx2::hamming256};
#else
      break;
#endif
  }
  return std::nullopt;
}

Isa detect_isa() noexcept {
  if (const char* env = std::getenv("XRMIMO_ISA")) {
    const std::string_view want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2") return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

namespace {

const KernelTable& table_storage(Isa isa) {
  static const KernelTable scalar_table = *kernels_for(Isa::Scalar);
  static const KernelTable avx2_table =
      kernels_for(Isa::Avx2).value_or(scalar_table);
  return isa == Isa::Avx2 ? avx2_table : scalar_table;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table_storage(detect_isa())};
  return slot;
}

}  // namespace

const KernelTable& kernels() noexcept { return *active_slot().load(std::memory_order_acquire); }

bool set_active_isa(Isa isa) noexcept {
  if (!isa_available(isa)) return false;
  active_slot().store(&table_storage(isa), std::memory_order_release);
  return true;
}

}  // namespace xrmimo::simd
