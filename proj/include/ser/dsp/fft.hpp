#pragma once

#include <cstddef>
#include <span>

namespace ser::dsp {

// Real-input forward DFT of a fixed size, backed by an FFTW plan. Input
// shorter than the size is zero-padded. Not safe for concurrent use.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // |X[b]|^2 for b = 0..n/2.
  void power(std::span<const double> input, std::span<double> out);

 private:
  std::size_t n_;
  double* in_;
  void* out_;  // fftw_complex*
  void* plan_;
};

}  // namespace ser::dsp
