#include "ser/dsp/fft.hpp"

#include <algorithm>
#include <new>

#include <fftw3.h>

#include "ser/error.hpp"

namespace ser::dsp {

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw RangeError("FFT size must be at least 2");
  in_ = fftw_alloc_real(n);
  out_ = fftw_alloc_complex(n / 2 + 1);
  if (!in_ || !out_) throw std::bad_alloc();
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, static_cast<fftw_complex*>(out_), FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(in_);
  fftw_free(out_);
}

void RealFft::power(std::span<const double> input, std::span<double> out) {
  const std::size_t m = std::min(input.size(), n_);
  std::copy_n(input.begin(), m, in_);
  std::fill(in_ + m, in_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(plan_));
  const auto* x = static_cast<const fftw_complex*>(out_);
  for (std::size_t b = 0; b < bins(); ++b) out[b] = x[b][0] * x[b][0] + x[b][1] * x[b][1];
}

}  // namespace ser::dsp
