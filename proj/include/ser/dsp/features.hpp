#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "ser/dsp/fft.hpp"
#include "ser/dsp/waveform.hpp"

namespace ser::dsp {

enum class FeatureKind { mfcc13 = 0, logmel26 = 1 };

std::string_view to_string(FeatureKind k);
FeatureKind parse_feature_kind(std::string_view s);

struct FeatureConfig {
  FeatureKind kind = FeatureKind::mfcc13;
  double t_fixed = 9.0;  // seconds, 1..15
  int frame_len = 400;   // 25 ms
  int hop = 160;         // 10 ms
  int fft_size = 512;
  int n_mels = 26;
  double mel_fmin = 0.0;
  double mel_fmax = 6500.0;
  int n_mfcc = 13;
  double log_floor = 1e-10;

  int feature_dim() const { return kind == FeatureKind::mfcc13 ? n_mfcc : n_mels; }
  std::size_t fixed_samples() const;
};

// Throws RangeError when the config breaks its invariants.
void validate(const FeatureConfig& cfg);

// s x d matrix, row-major (one row per frame).
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t dims = 0;
  std::size_t valid_frames = 0;
  FeatureKind kind = FeatureKind::mfcc13;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * dims, dims}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * dims, dims}; }
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

inline constexpr double kStdFloor = 1e-8;

// Cut or zero-pad at the end to exactly t_fixed * 16000 samples.
Waveform fix_length(const Waveform& w, double t_fixed);

// 1 + floor((L - frame_len) / hop); zero when L < frame_len.
std::size_t frame_count(std::size_t n_samples, const FeatureConfig& cfg);

struct Frames {
  std::size_t count = 0;
  std::size_t length = 0;
  std::size_t valid_frames = 0;
  std::vector<double> data;  // count x length

  std::span<const double> frame(std::size_t i) const { return {data.data() + i * length, length}; }
};

// Frame i covers samples [hop*i, hop*i + frame_len). A frame is valid when it
// starts inside the original (unpadded) signal.
Frames frame_signal(const Waveform& w, const FeatureConfig& cfg);

std::vector<double> hamming_window(std::size_t n);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// n_mels x (fft_size/2 + 1), row-major. Peak-1 triangles with centres evenly
// spaced on the mel axis between mel(fmin) and mel(fmax).
std::vector<double> mel_filterbank(const FeatureConfig& cfg);

// Hamming-windowed, zero-padded to fft_size; returns |X[b]|^2 for b = 0..fft_size/2.
std::vector<double> power_spectrum(std::span<const double> frame, const FeatureConfig& cfg);

std::vector<double> log_mel(std::span<const double> frame, const FeatureConfig& cfg);

// Orthonormal DCT-II of a log-mel vector, coefficients 0..n_mfcc-1.
std::vector<double> mfcc(std::span<const double> logmel, const FeatureConfig& cfg);

// Holds the window, filterbank and DCT basis so per-frame work does not rebuild them.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const FeatureConfig& cfg);

  const FeatureConfig& config() const { return cfg_; }
  void power_spectrum(std::span<const double> frame, std::span<double> out) const;
  void log_mel(std::span<const double> frame, std::span<double> out) const;
  void mfcc(std::span<const double> logmel, std::span<double> out) const;

  // fix_length -> frames -> log-mel (-> DCT). Unnormalized.
  FeatureMatrix extract(const Waveform& w) const;

 private:
  FeatureConfig cfg_;
  std::size_t n_bins_;
  std::vector<double> window_;
  std::vector<double> filterbank_;
  std::vector<double> dct_;
  std::unique_ptr<RealFft> fft_;
  mutable std::vector<double> windowed_;
};

FeatureMatrix extract_features(const Waveform& w, const FeatureConfig& cfg);

// Per-dimension mean and population std over the valid frames of every matrix.
// Throws when fewer than two valid frames are available.
NormStats compute_norm_stats(std::span<const FeatureMatrix* const> train);
NormStats compute_norm_stats(std::span<const FeatureMatrix> train);

// (row - mean) / std on every row, padded rows included.
FeatureMatrix apply_norm(const FeatureMatrix& fm, const NormStats& stats);

}  // namespace ser::dsp
