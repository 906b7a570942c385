#include "ser/eval/report.hpp"

namespace ser::eval {

using nlohmann::json;

EvalReport make_report(int fold_index, const Confusion& confusion, PredictionMode mode, std::uint64_t seed,
                       const std::string& config_hash) {
  EvalReport r;
  r.fold_index = fold_index;
  r.confusion = confusion;
  r.n_test = confusion.total();
  r.weighted_accuracy = weighted_accuracy(confusion);
  r.unweighted_accuracy = unweighted_accuracy(confusion);
  r.per_class_recall = per_class_recall(confusion);
  r.prediction_mode = mode;
  r.seed = seed;
  r.config_hash = config_hash;
  return r;
}

json to_json(const Confusion& c) {
  json rows = json::array();
  for (const auto& row : c.counts) rows.push_back(row);
  return rows;
}

json to_json(const SeparationDiagnostics& s) {
  return {{"mean_intra", s.mean_intra}, {"mean_inter", s.mean_inter}, {"separation_ratio", s.separation_ratio}};
}

json to_json(const EvalReport& r) {
  json j = {{"fold_index", r.fold_index},
            {"weighted_accuracy", r.weighted_accuracy},
            {"unweighted_accuracy", r.unweighted_accuracy},
            {"confusion", to_json(r.confusion)},
            {"per_class_recall", r.per_class_recall},
            {"n_test", r.n_test},
            {"prediction_mode", to_string(r.prediction_mode)},
            {"seed", r.seed},
            {"config_hash", r.config_hash}};
  if (r.separation) j["separation"] = to_json(*r.separation);
  return j;
}

json history_to_json(const std::vector<train::EpochRecord>& history) {
  json out = json::array();
  for (const auto& e : history) {
    out.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"val_loss", e.val_loss},
                   {"val_wa", e.val_wa},
                   {"val_uwa", e.val_uwa},
                   {"lr", e.lr}});
  }
  return out;
}

}  // namespace ser::eval
