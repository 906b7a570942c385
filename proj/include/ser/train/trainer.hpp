#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ser/data/corpus.hpp"
#include "ser/data/folds.hpp"
#include "ser/dsp/features.hpp"
#include "ser/losses/losses.hpp"
#include "ser/nn/model.hpp"
#include "ser/train/samplers.hpp"

namespace ser::train {

struct TrainConfig {
  loss::LossConfig loss;
  loss::MultiTaskConfig multitask;
  Sampler sampler = Sampler::loader_1;
  std::size_t batch_size = 32;
  int max_epochs = 100;
  double lr0 = 1e-4;
  int plateau_patience = 2;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
  int n_runs = 20;
  std::size_t loader2_pairs = 0;  // 0: balanced pool size
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // emotion cross-entropy, the monitored value
  double val_wa = 0.0;
  double val_uwa = 0.0;
  double lr = 0.0;
};

struct RunResult {
  nn::ModelParams model;  // best-validation weights
  dsp::NormStats norm;    // from this fold's training frames
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  std::uint64_t seed = 0;
  std::uint64_t optimizer_updates = 0;
};

// Unnormalized features for an utterance id.
using FeatureLookup = std::function<const dsp::FeatureMatrix&(const std::string& id)>;

// Auxiliary class index for a record; ValidationError when the label is missing.
int aux_label(const data::UtteranceRecord& r, loss::AuxTask task);

// Single training run on one fold. Normalization statistics come from the
// fold's training frames. Each epoch samples pairs, runs siamese steps with
// Adam, then scores the validation set; validation cross-entropy drives the
// plateau scheduler and early stopping, and the best epoch's weights are
// returned. Deterministic given (seed, config, features).
RunResult train(const data::FoldSplit& fold, const data::Corpus& corpus, const FeatureLookup& features,
                const nn::ModelDims& dims, const TrainConfig& cfg);

// As train, for cfg.multitask.task != none. Every training and validation
// record must carry the auxiliary label; the error lists offenders.
RunResult train_multitask(const data::FoldSplit& fold, const data::Corpus& corpus, const FeatureLookup& features,
                          const nn::ModelDims& dims, const TrainConfig& cfg);

// Seeds for independent streams of one run.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace ser::train
