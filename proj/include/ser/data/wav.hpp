#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "ser/dsp/waveform.hpp"

namespace ser::data {

// RIFF/WAVE PCM16 mono 16 kHz only. Anything else raises
// UnsupportedFormatError; no resampling or downmixing happens here.
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(std::span<const unsigned char> bytes);

// Samples are clamped to [-1, 1) and rounded to PCM16.
std::vector<unsigned char> encode_wav(std::span<const double> samples, int sample_rate = kSampleRate);
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate = kSampleRate);

}  // namespace ser::data
