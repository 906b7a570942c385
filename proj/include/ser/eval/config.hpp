#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ser/dsp/features.hpp"
#include "ser/eval/predict.hpp"
#include "ser/nn/model.hpp"
#include "ser/train/trainer.hpp"

namespace ser::eval {

struct EvalSettings {
  PredictionMode mode = PredictionMode::average;
  double validation_fraction = 0.2;
  std::vector<int> folds{1, 2, 3, 4, 5};
  bool improvised_only = true;
};

struct Paths {
  std::string manifest;
  std::string out_dir = "runs";
  std::string cache_dir;  // empty: <out_dir>/cache; SER_CACHE_DIR wins over both
};

struct ExperimentConfig {
  dsp::FeatureConfig features;
  nn::ModelDims model;  // in_ch and length follow the features
  train::TrainConfig train;
  EvalSettings eval;
  Paths paths;
  std::vector<double> sweep_lambdas{0.0, 0.6, 0.7, 0.8, 0.9, 1.0};
};

// Missing keys take defaults; unknown keys and bad values throw ValidationError.
// An omitted loss margin takes the default for the loss type.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::filesystem::path& path);

void validate(const ExperimentConfig& cfg);

// Model dimensions with in_ch and length taken from the feature config.
nn::ModelDims resolved_dims(const ExperimentConfig& cfg);

// Hash of the canonical JSON of everything except paths.
std::string config_hash(const ExperimentConfig& cfg);

std::filesystem::path cache_dir(const ExperimentConfig& cfg);

}  // namespace ser::eval
