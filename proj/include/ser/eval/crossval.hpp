#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ser/data/corpus.hpp"
#include "ser/eval/config.hpp"
#include "ser/eval/features_store.hpp"
#include "ser/eval/report.hpp"
#include "ser/nn/model.hpp"
#include "ser/train/trainer.hpp"

namespace ser::eval {

struct TestOutcome {
  Confusion confusion;
  std::vector<int> predictions;  // aligned with the test ids
  std::optional<SeparationDiagnostics> separation;
};

// Scores a trained model on test utterances. Segment predictions are combined
// per mode; crop draws one segment per utterance from a seed derived from
// (seed, id). Separation is measured on pos_1 of the fixed-length features
// when at least two classes have two or more test utterances.
TestOutcome evaluate_model(const nn::ModelParams& model, const dsp::NormStats& norm, FeatureStore& store,
                           const data::Corpus& corpus, const std::vector<std::string>& test_ids, PredictionMode mode,
                           std::uint64_t seed);

// pos_1 embeddings (rows) of the fixed-length features in eval mode.
nn::Tensor embed(const nn::ModelParams& model, const dsp::NormStats& norm, FeatureStore& store,
                 const std::vector<std::string>& ids);

struct RunSummary {
  EvalReport report;
  int best_epoch = 0;
  int epochs = 0;
};

struct FoldResult {
  EvalReport report;  // confusion pooled over the fold's runs
  double mean_wa = 0.0;
  double mean_uwa = 0.0;
  std::vector<RunSummary> runs;
};

struct CrossValResult {
  std::string config_hash;
  std::vector<FoldResult> folds;
  Confusion pooled;
  double weighted_accuracy = 0.0;
  double unweighted_accuracy = 0.0;
};

using RunCallback = std::function<void(int fold, int run, const train::RunResult&, const RunSummary&)>;

// Seed of run r on fold f.
std::uint64_t run_seed(std::uint64_t master, int fold, int run);

// Trains n_runs models per configured fold and tests each on the held-out session.
CrossValResult cross_validate(const data::Corpus& corpus, FeatureStore& store, const ExperimentConfig& cfg,
                              const RunCallback& on_run = {});

nlohmann::json to_json(const CrossValResult& r);

}  // namespace ser::eval
