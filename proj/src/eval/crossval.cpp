#include "ser/eval/crossval.hpp"

#include <algorithm>
#include <array>

#include "ser/data/folds.hpp"
#include "ser/error.hpp"
#include "ser/eval/canonical.hpp"

namespace ser::eval {

using nlohmann::json;

namespace {
constexpr std::size_t kBatch = 32;
}

nn::Tensor embed(const nn::ModelParams& model, const dsp::NormStats& norm, FeatureStore& store,
                 const std::vector<std::string>& ids) {
  const std::size_t width = model.dims.pos1_size();
  nn::Tensor out({ids.size(), width});
  for (std::size_t start = 0; start < ids.size(); start += kBatch) {
    const std::size_t end = std::min(ids.size(), start + kBatch);
    std::vector<dsp::FeatureMatrix> feats;
    for (std::size_t i = start; i < end; ++i) feats.push_back(dsp::apply_norm(store.utterance(ids[i]), norm));
    std::vector<const dsp::FeatureMatrix*> ptrs;
    for (const auto& f : feats) ptrs.push_back(&f);
    const auto res = nn::forward(model, nn::make_batch(ptrs), nn::Mode::eval);
    std::copy(res.pos1.data.begin(), res.pos1.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(start * width));
  }
  return out;
}

TestOutcome evaluate_model(const nn::ModelParams& model, const dsp::NormStats& norm, FeatureStore& store,
                           const data::Corpus& corpus, const std::vector<std::string>& test_ids, PredictionMode mode,
                           std::uint64_t seed) {
  TestOutcome out;
  std::vector<int> truth;
  for (const auto& id : test_ids) {
    std::vector<dsp::FeatureMatrix> segs;
    for (const auto& fm : store.segments(id)) segs.push_back(dsp::apply_norm(fm, norm));
    const auto probs = segment_probs(model, segs);
    const Prediction pred = mode == PredictionMode::average
                                ? average_prediction(probs)
                                : crop_prediction(probs, train::derive_seed(seed, fnv1a64(id)));
    const int t = static_cast<int>(corpus.at(id).emotion);
    out.confusion.add(t, pred.label);
    out.predictions.push_back(pred.label);
    truth.push_back(t);
  }

  std::array<int, data::kNumEmotions> counts{};
  for (int t : truth) ++counts[static_cast<std::size_t>(t)];
  if (std::count_if(counts.begin(), counts.end(), [](int c) { return c >= 2; }) >= 2) {
    out.separation = separation_diagnostics(embed(model, norm, store, test_ids), truth);
  }
  return out;
}

std::uint64_t run_seed(std::uint64_t master, int fold, int run) {
  return train::derive_seed(master, static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(run));
}

CrossValResult cross_validate(const data::Corpus& full_corpus, FeatureStore& store, const ExperimentConfig& cfg,
                              const RunCallback& on_run) {
  validate(cfg);
  const data::Corpus corpus = cfg.eval.improvised_only ? data::filter_improvised(full_corpus) : full_corpus;
  const auto splits = data::make_session_folds(corpus, cfg.eval.validation_fraction, cfg.train.seed);
  const nn::ModelDims dims = resolved_dims(cfg);

  CrossValResult result;
  result.config_hash = config_hash(cfg);
  const train::FeatureLookup lookup = [&store](const std::string& id) -> const dsp::FeatureMatrix& {
    return store.utterance(id);
  };

  for (int fold : cfg.eval.folds) {
    const data::FoldSplit& split = splits.at(static_cast<std::size_t>(fold - 1));
    FoldResult fr;
    Confusion pooled;
    for (int run = 0; run < cfg.train.n_runs; ++run) {
      train::TrainConfig tc = cfg.train;
      tc.seed = run_seed(cfg.train.seed, fold, run);
      const train::RunResult rr = train::train(split, corpus, lookup, dims, tc);
      const TestOutcome outcome = evaluate_model(rr.model, rr.norm, store, corpus, split.test_ids, cfg.eval.mode, tc.seed);
      RunSummary summary;
      summary.report = make_report(fold, outcome.confusion, cfg.eval.mode, tc.seed, result.config_hash);
      summary.report.separation = outcome.separation;
      summary.best_epoch = rr.best_epoch;
      summary.epochs = static_cast<int>(rr.history.size());
      pooled += outcome.confusion;
      fr.mean_wa += summary.report.weighted_accuracy;
      fr.mean_uwa += summary.report.unweighted_accuracy;
      if (on_run) on_run(fold, run, rr, summary);
      fr.runs.push_back(std::move(summary));
    }
    fr.mean_wa /= static_cast<double>(cfg.train.n_runs);
    fr.mean_uwa /= static_cast<double>(cfg.train.n_runs);
    fr.report = make_report(fold, pooled, cfg.eval.mode, cfg.train.seed, result.config_hash);
    result.pooled += pooled;
    result.folds.push_back(std::move(fr));
  }
  result.weighted_accuracy = weighted_accuracy(result.pooled);
  result.unweighted_accuracy = unweighted_accuracy(result.pooled);
  return result;
}

json to_json(const CrossValResult& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    json runs = json::array();
    for (const auto& run : f.runs) {
      json j = to_json(run.report);
      j["best_epoch"] = run.best_epoch;
      j["epochs"] = run.epochs;
      runs.push_back(std::move(j));
    }
    json fj = to_json(f.report);
    fj["mean_weighted_accuracy"] = f.mean_wa;
    fj["mean_unweighted_accuracy"] = f.mean_uwa;
    fj["runs"] = std::move(runs);
    folds.push_back(std::move(fj));
  }
  return {{"config_hash", r.config_hash},
          {"folds", std::move(folds)},
          {"aggregate",
           {{"confusion", to_json(r.pooled)},
            {"n_test", r.pooled.total()},
            {"weighted_accuracy", r.weighted_accuracy},
            {"unweighted_accuracy", r.unweighted_accuracy}}}};
}

}  // namespace ser::eval
