#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ser/data/corpus.hpp"
#include "ser/dsp/features.hpp"

namespace ser::eval {

// Directory name for one feature configuration, e.g. "mfcc13_t2.00_1a2b3c4d".
std::string feature_key(const dsp::FeatureConfig& cfg);

// Lazily extracted, unnormalized features for the records of a corpus, kept
// in memory and optionally mirrored to a cache directory. Training input is
// the fixed-length utterance; test input is the list of T_fixed segments.
// All values are rounded to f32 whether computed or read back. Cache files
// are named <id>.<fingerprint>.fcache, the fingerprint covering the wav's
// path, size and modification time.
class FeatureStore {
 public:
  FeatureStore(const data::Corpus& corpus, const dsp::FeatureConfig& cfg,
               std::optional<std::filesystem::path> cache_root = std::nullopt);

  const dsp::FeatureMatrix& utterance(const std::string& id);
  const std::vector<dsp::FeatureMatrix>& segments(const std::string& id);

  const dsp::FeatureConfig& config() const { return cfg_; }
  std::size_t extracted() const { return extracted_; }
  std::size_t cache_hits() const { return cache_hits_; }
  std::optional<std::filesystem::path> cache_dir() const { return dir_; }

 private:
  const data::UtteranceRecord& record(const std::string& id) const;
  std::optional<dsp::FeatureMatrix> load(const std::filesystem::path& path);
  void store(const std::filesystem::path& path, const dsp::FeatureMatrix& fm) const;

  dsp::FeatureConfig cfg_;
  std::map<std::string, const data::UtteranceRecord*> records_;
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, dsp::FeatureMatrix> utterances_;
  std::map<std::string, std::vector<dsp::FeatureMatrix>> segments_;
  std::size_t extracted_ = 0;
  std::size_t cache_hits_ = 0;
};

}  // namespace ser::eval
