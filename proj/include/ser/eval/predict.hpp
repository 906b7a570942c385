#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ser/data/corpus.hpp"
#include "ser/dsp/features.hpp"
#include "ser/dsp/waveform.hpp"
#include "ser/nn/model.hpp"

namespace ser::eval {

enum class PredictionMode { average, crop };
std::string_view to_string(PredictionMode m);
PredictionMode parse_prediction_mode(std::string_view s);

using Probs = std::array<double, data::kNumEmotions>;

struct Prediction {
  Probs probs{};
  int label = 0;
  std::size_t segment = 0;  // chosen segment in crop mode
  std::size_t n_segments = 0;
};

// Consecutive non-overlapping T_fixed windows over the unpadded signal; the
// last one is zero-padded. Each segment keeps its unpadded length in
// original_length. Short utterances give one segment.
std::vector<Waveform> segment_utterance(const Waveform& w, double t_fixed);

// Per-segment features, rounded to f32 like cached features.
std::vector<dsp::FeatureMatrix> segment_features(const Waveform& w, const dsp::FeatureConfig& cfg);

// Softmax outputs for already normalized feature matrices, in eval mode.
std::vector<Probs> segment_probs(const nn::ModelParams& model, std::span<const dsp::FeatureMatrix> normalized);

Prediction average_prediction(std::span<const Probs> per_segment);
std::size_t crop_index(std::size_t n_segments, std::uint64_t seed);
Prediction crop_prediction(std::span<const Probs> per_segment, std::uint64_t seed);

Prediction predict_average(const nn::ModelParams& model, const Waveform& w, const dsp::NormStats& stats,
                           const dsp::FeatureConfig& cfg);
Prediction predict_crop(const nn::ModelParams& model, const Waveform& w, const dsp::NormStats& stats,
                        const dsp::FeatureConfig& cfg, std::uint64_t seed);

}  // namespace ser::eval
