#include "ser/eval/features_store.hpp"

#include <cstdio>
#include <fstream>

#include "ser/data/wav.hpp"
#include "ser/dsp/feature_cache.hpp"
#include "ser/error.hpp"
#include "ser/eval/canonical.hpp"
#include "ser/eval/predict.hpp"

namespace ser::eval {

namespace fs = std::filesystem;

namespace {

// Ties a cache entry to one version of one audio file.
std::string wav_fingerprint(const std::string& wav_path) {
  std::error_code ec;
  const fs::path abs = fs::absolute(wav_path, ec);
  const auto size = fs::file_size(wav_path, ec);
  const auto mtime = fs::last_write_time(wav_path, ec).time_since_epoch().count();
  const std::string key = abs.string() + "|" + std::to_string(ec ? 0 : size) + "|" + std::to_string(ec ? 0 : mtime);
  return hex64(fnv1a64(key)).substr(0, 8);
}

}  // namespace

std::string feature_key(const dsp::FeatureConfig& cfg) {
  char head[64];
  std::snprintf(head, sizeof head, "%s_t%.2f_", std::string(dsp::to_string(cfg.kind)).c_str(), cfg.t_fixed);
  char params[256];
  std::snprintf(params, sizeof params, "%d|%.17g|%d|%d|%d|%d|%.17g|%.17g|%d|%.17g", static_cast<int>(cfg.kind),
                cfg.t_fixed, cfg.frame_len, cfg.hop, cfg.fft_size, cfg.n_mels, cfg.mel_fmin, cfg.mel_fmax, cfg.n_mfcc,
                cfg.log_floor);
  return head + hex64(fnv1a64(params)).substr(0, 8);
}

FeatureStore::FeatureStore(const data::Corpus& corpus, const dsp::FeatureConfig& cfg,
                           std::optional<fs::path> cache_root)
    : cfg_(cfg) {
  dsp::validate(cfg_);
  for (const auto& r : corpus.records) records_[r.id] = &r;
  if (cache_root) dir_ = *cache_root / feature_key(cfg_);
}

const data::UtteranceRecord& FeatureStore::record(const std::string& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) throw ValidationError("unknown utterance id '" + id + "'");
  return *it->second;
}

std::optional<dsp::FeatureMatrix> FeatureStore::load(const fs::path& path) {
  if (!dir_ || !fs::exists(path)) return std::nullopt;
  dsp::FeatureMatrix fm = dsp::read_feature_cache(path);
  if (fm.kind != cfg_.kind || fm.dims != static_cast<std::size_t>(cfg_.feature_dim())) {
    throw UnsupportedFormatError("feature cache " + path.string() + " does not match the feature config");
  }
  ++cache_hits_;
  return fm;
}

void FeatureStore::store(const fs::path& path, const dsp::FeatureMatrix& fm) const {
  if (!dir_) return;
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  dsp::write_feature_cache(tmp, fm);
  fs::rename(tmp, path);
}

const dsp::FeatureMatrix& FeatureStore::utterance(const std::string& id) {
  if (auto it = utterances_.find(id); it != utterances_.end()) return it->second;
  const fs::path path = dir_ ? *dir_ / (id + "." + wav_fingerprint(record(id).wav_path) + ".fcache") : fs::path();
  std::optional<dsp::FeatureMatrix> fm = load(path);
  if (!fm) {
    fm = dsp::extract_features(data::read_wav(record(id).wav_path), cfg_);
    dsp::quantize_to_f32(*fm);
    ++extracted_;
    store(path, *fm);
  }
  return utterances_.emplace(id, std::move(*fm)).first->second;
}

const std::vector<dsp::FeatureMatrix>& FeatureStore::segments(const std::string& id) {
  if (auto it = segments_.find(id); it != segments_.end()) return it->second;
  std::vector<dsp::FeatureMatrix> segs;
  const std::string stem = dir_ ? id + "." + wav_fingerprint(record(id).wav_path) : id;
  const fs::path index = dir_ ? *dir_ / (stem + ".segments") : fs::path();
  std::size_t count = 0;
  if (dir_ && fs::exists(index)) {
    std::ifstream in(index);
    if (!(in >> count) || count == 0) throw UnsupportedFormatError("bad segment index " + index.string());
    for (std::size_t k = 0; k < count; ++k) {
      auto fm = load(*dir_ / (stem + ".seg" + std::to_string(k) + ".fcache"));
      if (!fm) {
        segs.clear();
        break;
      }
      segs.push_back(std::move(*fm));
    }
  }
  if (segs.empty()) {
    segs = segment_features(data::read_wav(record(id).wav_path), cfg_);
    ++extracted_;
    if (dir_) {
      for (std::size_t k = 0; k < segs.size(); ++k) store(*dir_ / (stem + ".seg" + std::to_string(k) + ".fcache"), segs[k]);
      fs::create_directories(*dir_);
      std::ofstream(index) << segs.size() << "\n";
    }
  }
  return segments_.emplace(id, std::move(segs)).first->second;
}

}  // namespace ser::eval
