#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ser/eval/metrics.hpp"
#include "ser/eval/predict.hpp"
#include "ser/train/trainer.hpp"

namespace ser::eval {

struct EvalReport {
  int fold_index = 0;
  double weighted_accuracy = 0.0;
  double unweighted_accuracy = 0.0;
  Confusion confusion;
  std::array<double, kNumEmotions> per_class_recall{};
  std::int64_t n_test = 0;
  PredictionMode prediction_mode = PredictionMode::average;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::optional<SeparationDiagnostics> separation;  // pos_1 of the test set
};

EvalReport make_report(int fold_index, const Confusion& confusion, PredictionMode mode, std::uint64_t seed,
                       const std::string& config_hash);

nlohmann::json to_json(const Confusion& c);
nlohmann::json to_json(const SeparationDiagnostics& s);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json history_to_json(const std::vector<train::EpochRecord>& history);

}  // namespace ser::eval
