#pragma once

#include <optional>

#include "xrmimo/simd/kernels.hpp"

namespace xrmimo::simd {

/// True when the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa) noexcept;

/// Best ISA for this CPU. XRMIMO_ISA=scalar|avx2 in the environment
/// overrides the choice (an unavailable request falls back to scalar).
Isa detect_isa() noexcept;

/// Table for the process-wide active ISA (detected once, overridable).
const KernelTable& kernels() noexcept;

/// Table for a specific ISA; nullopt when unavailable.
std::optional<KernelTable> kernels_for(Isa isa) noexcept;

/// Pin the active ISA. Returns false (and changes nothing) if unavailable.
bool set_active_isa(Isa isa) noexcept;

}  // namespace xrmimo::simd
