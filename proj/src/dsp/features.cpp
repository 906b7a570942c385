#include "ser/dsp/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ser/dsp/fft.hpp"
#include "ser/error.hpp"

namespace ser::dsp {

std::string_view to_string(FeatureKind k) { return k == FeatureKind::mfcc13 ? "mfcc13" : "logmel26"; }

FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "mfcc13") return FeatureKind::mfcc13;
  if (s == "logmel26") return FeatureKind::logmel26;
  throw ParseError("unknown feature kind '" + std::string(s) + "'");
}

std::size_t FeatureConfig::fixed_samples() const {
  return static_cast<std::size_t>(std::llround(t_fixed * kSampleRate));
}

void validate(const FeatureConfig& cfg) {
  if (!(cfg.t_fixed >= 1.0 && cfg.t_fixed <= 15.0)) throw RangeError("t_fixed must lie in [1, 15] seconds");
  if (cfg.frame_len < 2 || cfg.hop < 1) throw RangeError("frame_len >= 2 and hop >= 1 required");
  if (cfg.frame_len > cfg.fft_size) throw RangeError("frame_len exceeds fft_size");
  if (!(cfg.mel_fmin >= 0.0 && cfg.mel_fmin < cfg.mel_fmax && cfg.mel_fmax <= kSampleRate / 2.0)) {
    throw RangeError("mel range must satisfy 0 <= fmin < fmax <= sample_rate/2");
  }
  if (cfg.n_mels < 1 || cfg.n_mfcc < 1 || cfg.n_mfcc > cfg.n_mels) throw RangeError("bad n_mels/n_mfcc");
  if (!(cfg.log_floor > 0.0)) throw RangeError("log_floor must be positive");
}

Waveform fix_length(const Waveform& w, double t_fixed) {
  const auto target = static_cast<std::size_t>(std::llround(t_fixed * kSampleRate));
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.original_length = w.original_length;
  out.samples.assign(target, 0.0);
  std::copy_n(w.samples.begin(), std::min(target, w.samples.size()), out.samples.begin());
  return out;
}

std::size_t frame_count(std::size_t n_samples, const FeatureConfig& cfg) {
  const auto len = static_cast<std::size_t>(cfg.frame_len);
  if (n_samples < len) return 0;
  return 1 + (n_samples - len) / static_cast<std::size_t>(cfg.hop);
}

Frames frame_signal(const Waveform& w, const FeatureConfig& cfg) {
  Frames f;
  f.count = frame_count(w.samples.size(), cfg);
  f.length = static_cast<std::size_t>(cfg.frame_len);
  const auto hop = static_cast<std::size_t>(cfg.hop);
  f.data.resize(f.count * f.length);
  for (std::size_t i = 0; i < f.count; ++i) {
    std::copy_n(w.samples.begin() + i * hop, f.length, f.data.begin() + i * f.length);
  }
  f.valid_frames = std::min(f.count, (w.original_length + hop - 1) / hop);
  return f;
}

std::vector<double> hamming_window(std::size_t n) {
  if (n < 2) throw RangeError("window length must be >= 2");
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / static_cast<double>(n - 1));
  }
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_filterbank(const FeatureConfig& cfg) {
  const auto n_bins = static_cast<std::size_t>(cfg.fft_size / 2 + 1);
  const auto n_mels = static_cast<std::size_t>(cfg.n_mels);
  const double mel_lo = hz_to_mel(cfg.mel_fmin);
  const double mel_hi = hz_to_mel(cfg.mel_fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  edges.front() = cfg.mel_fmin;
  edges.back() = cfg.mel_fmax;

  std::vector<double> fb(n_mels * n_bins, 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * kSampleRate / cfg.fft_size;
      double weight = 0.0;
      if (f > left && f <= centre) {
        weight = (f - left) / (centre - left);
      } else if (f > centre && f < right) {
        weight = (right - f) / (right - centre);
      }
      fb[m * n_bins + b] = weight;
    }
  }
  return fb;
}

FeatureExtractor::FeatureExtractor(const FeatureConfig& cfg)
    : cfg_(cfg),
      n_bins_(static_cast<std::size_t>(cfg.fft_size / 2 + 1)),
      window_(hamming_window(static_cast<std::size_t>(cfg.frame_len))),
      filterbank_(mel_filterbank(cfg)) {
  validate(cfg_);
  fft_ = std::make_unique<RealFft>(static_cast<std::size_t>(cfg.fft_size));
  windowed_.resize(window_.size());
  const auto n = static_cast<std::size_t>(cfg.n_mels);
  const auto k_max = static_cast<std::size_t>(cfg.n_mfcc);
  dct_.resize(k_max * n);
  for (std::size_t k = 0; k < k_max; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      dct_[k * n + i] = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                         (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(n)));
    }
  }
}

void FeatureExtractor::power_spectrum(std::span<const double> frame, std::span<double> out) const {
  const std::size_t n = std::min(frame.size(), window_.size());
  for (std::size_t i = 0; i < n; ++i) windowed_[i] = frame[i] * window_[i];
  fft_->power(std::span<const double>(windowed_.data(), n), out);
}

void FeatureExtractor::log_mel(std::span<const double> frame, std::span<double> out) const {
  std::vector<double> power(n_bins_);
  power_spectrum(frame, power);
  for (std::size_t m = 0; m < static_cast<std::size_t>(cfg_.n_mels); ++m) {
    double energy = 0.0;
    const double* row = filterbank_.data() + m * n_bins_;
    for (std::size_t b = 0; b < n_bins_; ++b) energy += row[b] * power[b];
    out[m] = std::log(std::max(energy, cfg_.log_floor));
  }
}

void FeatureExtractor::mfcc(std::span<const double> logmel, std::span<double> out) const {
  const auto n = static_cast<std::size_t>(cfg_.n_mels);
  if (logmel.size() != n) throw ShapeError("mfcc: expected " + std::to_string(n) + " log-mel values");
  for (std::size_t k = 0; k < static_cast<std::size_t>(cfg_.n_mfcc); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += dct_[k * n + i] * logmel[i];
    out[k] = acc;
  }
}

FeatureMatrix FeatureExtractor::extract(const Waveform& w) const {
  const Waveform fixed = fix_length(w, cfg_.t_fixed);
  const Frames frames = frame_signal(fixed, cfg_);
  FeatureMatrix fm;
  fm.kind = cfg_.kind;
  fm.frames = frames.count;
  fm.dims = static_cast<std::size_t>(cfg_.feature_dim());
  fm.valid_frames = frames.valid_frames;
  fm.data.resize(fm.frames * fm.dims);
  std::vector<double> lm(static_cast<std::size_t>(cfg_.n_mels));
  for (std::size_t i = 0; i < frames.count; ++i) {
    log_mel(frames.frame(i), lm);
    if (cfg_.kind == FeatureKind::mfcc13) {
      mfcc(lm, fm.row(i));
    } else {
      std::copy(lm.begin(), lm.end(), fm.row(i).begin());
    }
  }
  return fm;
}

std::vector<double> power_spectrum(std::span<const double> frame, const FeatureConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.fft_size / 2 + 1));
  FeatureExtractor(cfg).power_spectrum(frame, out);
  return out;
}

std::vector<double> log_mel(std::span<const double> frame, const FeatureConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.n_mels));
  FeatureExtractor(cfg).log_mel(frame, out);
  return out;
}

std::vector<double> mfcc(std::span<const double> logmel, const FeatureConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.n_mfcc));
  FeatureExtractor(cfg).mfcc(logmel, out);
  return out;
}

FeatureMatrix extract_features(const Waveform& w, const FeatureConfig& cfg) {
  return FeatureExtractor(cfg).extract(w);
}

NormStats compute_norm_stats(std::span<const FeatureMatrix* const> train) {
  if (train.empty()) throw ValidationError("compute_norm_stats: no training features");
  const std::size_t d = train.front()->dims;
  std::size_t n = 0;
  NormStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const FeatureMatrix* fm : train) {
    if (fm->dims != d) throw ShapeError("compute_norm_stats: feature dimension mismatch");
    for (std::size_t i = 0; i < fm->valid_frames; ++i) {
      auto row = fm->row(i);
      for (std::size_t j = 0; j < d; ++j) stats.mean[j] += row[j];
    }
    n += fm->valid_frames;
  }
  if (n < 2) throw ValidationError("compute_norm_stats: need at least 2 valid frames");
  for (auto& m : stats.mean) m /= static_cast<double>(n);
  for (const FeatureMatrix* fm : train) {
    for (std::size_t i = 0; i < fm->valid_frames; ++i) {
      auto row = fm->row(i);
      for (std::size_t j = 0; j < d; ++j) {
        const double c = row[j] - stats.mean[j];
        stats.std[j] += c * c;
      }
    }
  }
  for (auto& s : stats.std) s = std::max(std::sqrt(s / static_cast<double>(n)), kStdFloor);
  return stats;
}

NormStats compute_norm_stats(std::span<const FeatureMatrix> train) {
  std::vector<const FeatureMatrix*> ptrs;
  ptrs.reserve(train.size());
  for (const auto& fm : train) ptrs.push_back(&fm);
  return compute_norm_stats(ptrs);
}

FeatureMatrix apply_norm(const FeatureMatrix& fm, const NormStats& stats) {
  if (stats.mean.size() != fm.dims || stats.std.size() != fm.dims) {
    throw ShapeError("apply_norm: stats have " + std::to_string(stats.mean.size()) + " dims, features " +
                     std::to_string(fm.dims));
  }
  FeatureMatrix out = fm;
  for (std::size_t i = 0; i < out.frames; ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < out.dims; ++j) row[j] = (row[j] - stats.mean[j]) / stats.std[j];
  }
  return out;
}

}  // namespace ser::dsp
