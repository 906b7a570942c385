#include "ser/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "ser/data/manifest.hpp"
#include "ser/data/wav.hpp"
#include "ser/error.hpp"

namespace ser::data {

namespace {

constexpr int kMaxHarmonics = 5;
constexpr double kPeak = 0.8;

// Rough per-class centres for valence, activation, dominance.
constexpr double kDimensionCentres[kNumEmotions][3] = {
    {2.0, 4.5, 4.0},  // angry
    {4.5, 3.5, 3.5},  // happy
    {1.5, 1.5, 2.0},  // sad
    {3.0, 3.0, 3.0},  // neutral
};

std::mt19937_64 record_rng(std::uint64_t seed, int cls, int index, int stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cls), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

std::vector<double> synthesize_utterance(Emotion emotion, std::size_t n_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> snr_dist(5.0, 20.0);

  const double f0 = 200.0 * (static_cast<int>(emotion) + 1);
  std::vector<double> x(n_samples, 0.0);
  double signal_power = 0.0;
  for (int h = 1; h <= kMaxHarmonics; ++h) {
    const double f = f0 * h;
    if (f >= 0.45 * kSampleRate) break;
    const double amp = 1.0 / h;
    const double phase = phase_dist(rng);
    const double w = 2.0 * std::numbers::pi * f / kSampleRate;
    for (std::size_t n = 0; n < n_samples; ++n) x[n] += amp * std::sin(w * n + phase);
    signal_power += 0.5 * amp * amp;
  }
  const double snr_db = snr_dist(rng);
  std::normal_distribution<double> noise(0.0, std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0)));
  for (auto& v : x) v += noise(rng);

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (auto& v : x) v *= kPeak / peak;
  }
  return x;
}

Corpus generate_synthetic_corpus(const SynthOptions& opts, const std::filesystem::path& out_dir) {
  if (opts.n_per_class < 1) throw RangeError("n_per_class must be >= 1");
  if (!(opts.min_seconds > 0.0 && opts.max_seconds >= opts.min_seconds)) {
    throw RangeError("invalid duration range");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "wav").string() + ": " + ec.message());

  Corpus corpus;
  std::ofstream manifest(out_dir / "manifest.jsonl");
  if (!manifest) throw IoError("cannot write " + (out_dir / "manifest.jsonl").string());

  for (int j = 0; j < opts.n_per_class; ++j) {
    for (int k = 0; k < kNumEmotions; ++k) {
      const auto emotion = static_cast<Emotion>(k);
      auto rng = record_rng(opts.seed, k, j, 0);
      std::uniform_real_distribution<double> dur(opts.min_seconds, opts.max_seconds);
      const double seconds = opts.min_seconds == opts.max_seconds ? opts.min_seconds : dur(rng);
      const auto n_samples = static_cast<std::size_t>(std::llround(seconds * kSampleRate));

      UtteranceRecord r;
      char id[64];
      std::snprintf(id, sizeof id, "synth_%s_%04d", std::string(to_string(emotion)).c_str(), j);
      r.id = id;
      r.session = j % 5 + 1;
      const bool female = (j / 5) % 2 == 0;
      r.speaker = "Ses0" + std::to_string(r.session) + (female ? "F" : "M");
      r.gender = female ? Gender::female : Gender::male;
      r.emotion = emotion;
      r.scenario = Scenario::improvised;
      std::uniform_real_distribution<double> jitter(-0.75, 0.75);
      auto dim = [&](int axis) {
        return std::round(std::clamp(kDimensionCentres[k][axis] + jitter(rng), 1.0, 5.0) * 100.0) / 100.0;
      };
      r.valence = dim(0);
      r.activation = dim(1);
      r.dominance = dim(2);
      r.sample_count = n_samples;

      const std::string rel = "wav/" + r.id + ".wav";
      const std::uint64_t signal_seed = record_rng(opts.seed, k, j, 1)();
      write_wav(out_dir / rel, synthesize_utterance(emotion, n_samples, signal_seed));

      r.wav_path = rel;
      write_manifest_line(manifest, r);
      r.wav_path = (out_dir / rel).string();
      corpus.records.push_back(std::move(r));
    }
  }
  if (!manifest) throw IoError("short write to manifest");
  return corpus;
}

}  // namespace ser::data
