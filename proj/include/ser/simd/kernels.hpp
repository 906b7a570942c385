#pragma once

// Inner-loop kernels shared by the network layers and the losses.
//
// Each kernel has a scalar reference and, where the target supports it, an
// AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is picked once per
// process from CPU detection; SER_SIMD=scalar|avx2|neon forces a choice.
// Vector variants reassociate sums, so they agree with the scalar reference
// to rounding, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace ser::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

std::string_view isa_name(Isa isa);

// True when this build carries the variant and the running CPU can execute it.
bool isa_available(Isa isa);

// Table for a specific variant. Throws ser::Error when unavailable.
const KernelTable& kernels_for(Isa isa);

// The table selected for this process.
const KernelTable& active_kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
#endif
#if defined(__aarch64__)
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
#endif
}  // namespace detail

}  // namespace ser::simd
