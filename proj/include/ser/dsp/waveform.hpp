#pragma once

#include <cstddef>
#include <vector>

namespace ser {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
  // Length of the signal before any padding or cutting.
  std::size_t original_length = 0;
};

}  // namespace ser
