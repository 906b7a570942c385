#include "ser/eval/predict.hpp"

#include <algorithm>
#include <random>

#include "ser/dsp/feature_cache.hpp"
#include "ser/error.hpp"
#include "ser/eval/metrics.hpp"

namespace ser::eval {

namespace {
constexpr std::size_t kBatch = 32;
}

std::string_view to_string(PredictionMode m) { return m == PredictionMode::average ? "average" : "crop"; }

PredictionMode parse_prediction_mode(std::string_view s) {
  if (s == "average") return PredictionMode::average;
  if (s == "crop") return PredictionMode::crop;
  throw ValidationError("unknown prediction mode '" + std::string(s) + "'");
}

std::vector<Waveform> segment_utterance(const Waveform& w, double t_fixed) {
  if (!(t_fixed > 0.0)) throw RangeError("T_fixed must be positive");
  const auto seg_len = static_cast<std::size_t>(std::llround(t_fixed * w.sample_rate));
  const std::size_t n = w.samples.size();
  const std::size_t count = std::max<std::size_t>(1, (n + seg_len - 1) / seg_len);
  std::vector<Waveform> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Waveform seg;
    seg.sample_rate = w.sample_rate;
    seg.samples.assign(seg_len, 0.0);
    const std::size_t begin = k * seg_len;
    const std::size_t end = std::min(n, begin + seg_len);
    if (begin < end) std::copy(w.samples.begin() + begin, w.samples.begin() + end, seg.samples.begin());
    seg.original_length = end > begin ? end - begin : 0;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<dsp::FeatureMatrix> segment_features(const Waveform& w, const dsp::FeatureConfig& cfg) {
  const dsp::FeatureExtractor extractor(cfg);
  std::vector<dsp::FeatureMatrix> out;
  for (const auto& seg : segment_utterance(w, cfg.t_fixed)) {
    out.push_back(extractor.extract(seg));
    dsp::quantize_to_f32(out.back());
  }
  return out;
}

std::vector<Probs> segment_probs(const nn::ModelParams& model, std::span<const dsp::FeatureMatrix> normalized) {
  std::vector<Probs> out;
  out.reserve(normalized.size());
  std::vector<const dsp::FeatureMatrix*> ptrs;
  for (const auto& fm : normalized) ptrs.push_back(&fm);
  for (std::size_t start = 0; start < ptrs.size(); start += kBatch) {
    const std::size_t end = std::min(ptrs.size(), start + kBatch);
    const auto res = nn::forward(model, nn::make_batch({ptrs.data() + start, end - start}), nn::Mode::eval);
    for (std::size_t i = 0; i < end - start; ++i) {
      Probs p{};
      const auto row = res.probs.slice(i);
      std::copy(row.begin(), row.end(), p.begin());
      out.push_back(p);
    }
  }
  return out;
}

Prediction average_prediction(std::span<const Probs> per_segment) {
  if (per_segment.empty()) throw ValidationError("no segments to average");
  Prediction pred;
  for (const auto& p : per_segment) {
    for (int c = 0; c < data::kNumEmotions; ++c) pred.probs[c] += p[c];
  }
  for (auto& v : pred.probs) v /= static_cast<double>(per_segment.size());
  pred.label = argmax(pred.probs);
  pred.n_segments = per_segment.size();
  return pred;
}

std::size_t crop_index(std::size_t n_segments, std::uint64_t seed) {
  if (n_segments == 0) throw ValidationError("no segments to crop");
  std::mt19937_64 rng(seed);
  return std::uniform_int_distribution<std::size_t>(0, n_segments - 1)(rng);
}

Prediction crop_prediction(std::span<const Probs> per_segment, std::uint64_t seed) {
  const std::size_t k = crop_index(per_segment.size(), seed);
  Prediction pred;
  pred.probs = per_segment[k];
  pred.label = argmax(pred.probs);
  pred.segment = k;
  pred.n_segments = per_segment.size();
  return pred;
}

namespace {

std::vector<Probs> probs_for(const nn::ModelParams& model, const Waveform& w, const dsp::NormStats& stats,
                             const dsp::FeatureConfig& cfg) {
  std::vector<dsp::FeatureMatrix> feats;
  for (const auto& fm : segment_features(w, cfg)) feats.push_back(dsp::apply_norm(fm, stats));
  return segment_probs(model, feats);
}

}  // namespace

Prediction predict_average(const nn::ModelParams& model, const Waveform& w, const dsp::NormStats& stats,
                           const dsp::FeatureConfig& cfg) {
  return average_prediction(probs_for(model, w, stats, cfg));
}

Prediction predict_crop(const nn::ModelParams& model, const Waveform& w, const dsp::NormStats& stats,
                        const dsp::FeatureConfig& cfg, std::uint64_t seed) {
  return crop_prediction(probs_for(model, w, stats, cfg), seed);
}

}  // namespace ser::eval
