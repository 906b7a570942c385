#pragma once

#include <cstdint>
#include <filesystem>

#include "ser/data/corpus.hpp"

namespace ser::data {

struct SynthOptions {
  int n_per_class = 100;
  double min_seconds = 2.0;
  double max_seconds = 4.0;
  std::uint64_t seed = 0;
};

// Desk-scale stand-in for a licensed corpus. Class k is a harmonic stack on a
// 200*(k+1) Hz fundamental with random phases, plus white noise at an SNR drawn
// from [5, 20] dB. Records are spread round-robin over sessions 1..5, two
// speakers per session. Writes <out_dir>/manifest.jsonl and <out_dir>/wav/.
Corpus generate_synthetic_corpus(const SynthOptions& opts, const std::filesystem::path& out_dir);

// The waveform generator alone, without touching the filesystem.
std::vector<double> synthesize_utterance(Emotion emotion, std::size_t n_samples, std::uint64_t seed);

}  // namespace ser::data
