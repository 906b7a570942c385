#include "ser/simd/kernels.hpp"

#include <cstdlib>
#include <string>

#include "ser/error.hpp"

namespace ser::simd {

namespace {

constexpr KernelTable kScalar{Isa::scalar, &detail::dot_scalar, &detail::axpy_scalar};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2{Isa::avx2, &detail::dot_avx2, &detail::axpy_avx2};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{Isa::neon, &detail::dot_neon, &detail::axpy_neon};
#endif

const KernelTable& select() {
  if (const char* env = std::getenv("SER_SIMD"); env && *env) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa)) return kernels_for(isa);
    }
    throw Error("SER_SIMD: unknown kernel set '" + want + "'");
  }
  if (isa_available(Isa::avx2)) return kernels_for(Isa::avx2);
  if (isa_available(Isa::neon)) return kernels_for(Isa::neon);
  return kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "?";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw Error("kernel set '" + std::string(isa_name(isa)) + "' is not available on this CPU");
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return kAvx2;
#endif
#if defined(__aarch64__)
    case Isa::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active_kernels() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace ser::simd
