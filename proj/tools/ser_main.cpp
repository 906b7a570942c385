#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ser/data/folds.hpp"
#include "ser/data/manifest.hpp"
#include "ser/data/synth.hpp"
#include "ser/error.hpp"
#include "ser/eval/canonical.hpp"
#include "ser/eval/config.hpp"
#include "ser/eval/crossval.hpp"
#include "ser/eval/features_store.hpp"
#include "ser/eval/report.hpp"
#include "ser/nn/checkpoint.hpp"
#include "ser/simd/kernels.hpp"
#include "ser/train/siamese_gradcheck.hpp"
#include "ser/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ser::IoError("cannot write " + path.string());
  out << text;
}

ser::data::Corpus load_corpus(const std::string& manifest) {
  if (manifest.empty()) throw ser::ValidationError("no manifest given (paths.manifest or --manifest)");
  auto load = ser::data::parse_manifest(fs::path(manifest));
  for (const auto& [label, n] : load.dropped_by_label) {
    std::fprintf(stderr, "dropped %zu records with label '%s'\n", n, label.c_str());
  }
  return std::move(load.corpus);
}

ser::eval::ExperimentConfig config_or_default(const std::string& path) {
  return path.empty() ? ser::eval::ExperimentConfig{} : ser::eval::load_config(path);
}

json norm_to_json(const ser::dsp::NormStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

ser::dsp::NormStats norm_from_json(const json& j) {
  if (!j.contains("mean") || !j.contains("std")) throw ser::ValidationError("checkpoint has no normalization statistics");
  return {j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>()};
}

json features_to_json(const ser::eval::ExperimentConfig& cfg) { return ser::eval::config_to_json(cfg)["features"]; }

const ser::data::FoldSplit& fold_split(const std::vector<ser::data::FoldSplit>& splits, int fold) {
  if (fold < 1 || fold > static_cast<int>(splits.size())) throw ser::RangeError("--fold must lie in 1..5");
  return splits[static_cast<std::size_t>(fold - 1)];
}

int cmd_synth(int n_per_class, const std::string& out, std::uint64_t seed, double min_s, double max_s) {
  ser::data::SynthOptions opts;
  opts.n_per_class = n_per_class;
  opts.seed = seed;
  opts.min_seconds = min_s;
  opts.max_seconds = max_s;
  const auto corpus = ser::data::generate_synthetic_corpus(opts, out);
  std::printf("wrote %zu utterances to %s\n", corpus.records.size(), (fs::path(out) / "manifest.jsonl").c_str());
  return 0;
}

int cmd_extract(ser::eval::ExperimentConfig cfg, bool segments) {
  const auto corpus = load_corpus(cfg.paths.manifest);
  ser::eval::FeatureStore store(corpus, cfg.features, ser::eval::cache_dir(cfg));
  for (const auto& r : corpus.records) {
    store.utterance(r.id);
    if (segments) store.segments(r.id);
  }
  std::printf("%zu utterances, %zu extracted, %zu read from cache, cache %s\n", corpus.records.size(), store.extracted(),
              store.cache_hits(), store.cache_dir()->c_str());
  return 0;
}

int cmd_train(const ser::eval::ExperimentConfig& cfg, int fold, std::optional<std::uint64_t> seed,
              std::string out_dir) {
  const auto full = load_corpus(cfg.paths.manifest);
  const auto corpus = cfg.eval.improvised_only ? ser::data::filter_improvised(full) : full;
  const auto splits = ser::data::make_session_folds(corpus, cfg.eval.validation_fraction, cfg.train.seed);
  const auto& split = fold_split(splits, fold);
  ser::eval::FeatureStore store(corpus, cfg.features, ser::eval::cache_dir(cfg));
  ser::train::TrainConfig tc = cfg.train;
  tc.seed = seed.value_or(ser::eval::run_seed(cfg.train.seed, fold, 0));
  if (out_dir.empty()) out_dir = (fs::path(cfg.paths.out_dir) / ("fold" + std::to_string(fold) + "_seed" + std::to_string(tc.seed))).string();

  const auto result = ser::train::train(
      split, corpus, [&store](const std::string& id) -> const ser::dsp::FeatureMatrix& { return store.utterance(id); },
      ser::eval::resolved_dims(cfg), tc);

  ser::nn::CheckpointMeta meta;
  meta.seed = tc.seed;
  meta.epoch = result.best_epoch;
  meta.feature_config = features_to_json(cfg);
  meta.norm = norm_to_json(result.norm);
  fs::create_directories(out_dir);
  ser::nn::save_checkpoint(fs::path(out_dir) / "model.ckpt", result.model, meta);
  write_text(fs::path(out_dir) / "history.json", ser::eval::canonical_dump(ser::eval::history_to_json(result.history)));
  std::printf("fold %d seed %llu: best epoch %d of %zu, val loss %.6f -> %s\n", fold,
              static_cast<unsigned long long>(tc.seed), result.best_epoch, result.history.size(),
              result.history.at(static_cast<std::size_t>(result.best_epoch - 1)).val_loss, out_dir.c_str());
  return 0;
}

int cmd_evaluate(ser::eval::ExperimentConfig cfg, const std::string& checkpoint, int fold,
                 std::optional<std::string> mode, std::optional<std::uint64_t> seed, const std::string& out) {
  if (mode) cfg.eval.mode = ser::eval::parse_prediction_mode(*mode);
  ser::nn::CheckpointMeta meta;
  const auto model = ser::nn::load_checkpoint(checkpoint, &meta);
  if (!meta.feature_config.empty() && meta.feature_config != features_to_json(cfg)) {
    throw ser::ValidationError("checkpoint was trained with different feature settings");
  }
  const auto norm = norm_from_json(meta.norm);
  const auto full = load_corpus(cfg.paths.manifest);
  const auto corpus = cfg.eval.improvised_only ? ser::data::filter_improvised(full) : full;
  const auto splits = ser::data::make_session_folds(corpus, cfg.eval.validation_fraction, cfg.train.seed);
  const auto& split = fold_split(splits, fold);
  ser::eval::FeatureStore store(corpus, cfg.features, ser::eval::cache_dir(cfg));
  const std::uint64_t s = seed.value_or(meta.seed);
  const auto outcome = ser::eval::evaluate_model(model, norm, store, corpus, split.test_ids, cfg.eval.mode, s);
  auto report = ser::eval::make_report(fold, outcome.confusion, cfg.eval.mode, s, ser::eval::config_hash(cfg));
  report.separation = outcome.separation;
  const std::string text = ser::eval::canonical_dump(ser::eval::to_json(report));
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_text(out, text);
  }
  return 0;
}

ser::eval::RunCallback progress(bool save, const ser::eval::ExperimentConfig& cfg, const std::string& tag) {
  return [save, &cfg, tag](int fold, int run, const ser::train::RunResult& rr, const ser::eval::RunSummary& s) {
    std::fprintf(stderr, "%sfold %d run %d: WA %.4f UWA %.4f (best epoch %d/%d)\n", tag.c_str(), fold, run,
                 s.report.weighted_accuracy, s.report.unweighted_accuracy, s.best_epoch, s.epochs);
    if (!save) return;
    const fs::path dir = fs::path(cfg.paths.out_dir) / ser::eval::config_hash(cfg) /
                         ("fold" + std::to_string(fold) + "_run" + std::to_string(run));
    ser::nn::CheckpointMeta meta;
    meta.seed = rr.seed;
    meta.epoch = rr.best_epoch;
    meta.feature_config = features_to_json(cfg);
    meta.norm = norm_to_json(rr.norm);
    fs::create_directories(dir);
    ser::nn::save_checkpoint(dir / "model.ckpt", rr.model, meta);
    write_text(dir / "history.json", ser::eval::canonical_dump(ser::eval::history_to_json(rr.history)));
  };
}

int cmd_cross_validate(const ser::eval::ExperimentConfig& cfg, const std::string& out, bool save) {
  const auto corpus = load_corpus(cfg.paths.manifest);
  ser::eval::FeatureStore store(corpus, cfg.features, ser::eval::cache_dir(cfg));
  const auto result = ser::eval::cross_validate(corpus, store, cfg, progress(save, cfg, ""));
  const fs::path path = out.empty() ? fs::path(cfg.paths.out_dir) / ("crossval_" + result.config_hash + ".json") : fs::path(out);
  write_text(path, ser::eval::canonical_dump(ser::eval::to_json(result)));
  std::printf("WA %.4f UWA %.4f over %lld test utterances -> %s\n", result.weighted_accuracy,
              result.unweighted_accuracy, static_cast<long long>(result.pooled.total()), path.c_str());
  return 0;
}

int cmd_sweep(const ser::eval::ExperimentConfig& base, const std::string& out, bool save) {
  const auto corpus = load_corpus(base.paths.manifest);
  ser::eval::FeatureStore store(corpus, base.features, ser::eval::cache_dir(base));
  json points = json::array();
  std::optional<std::size_t> best;
  double best_wa = -1.0;
  for (double lambda : base.sweep_lambdas) {
    ser::eval::ExperimentConfig cfg = base;
    cfg.train.loss.lambda = lambda;
    char tag[32];
    std::snprintf(tag, sizeof tag, "lambda %.2f ", lambda);
    const auto r = ser::eval::cross_validate(corpus, store, cfg, progress(save, cfg, tag));
    std::printf("lambda %.2f: WA %.4f UWA %.4f\n", lambda, r.weighted_accuracy, r.unweighted_accuracy);
    json p = ser::eval::to_json(r);
    p["lambda"] = lambda;
    if (lambda > 0.0 && r.weighted_accuracy > best_wa) {
      best_wa = r.weighted_accuracy;
      best = points.size();
    }
    points.push_back(std::move(p));
  }
  json summary = {{"points", points}, {"base_config_hash", ser::eval::config_hash(base)}};
  if (best) summary["best_lambda"] = points[*best]["lambda"];
  const fs::path path = out.empty() ? fs::path(base.paths.out_dir) / ("sweep_" + ser::eval::config_hash(base) + ".json") : fs::path(out);
  write_text(path, ser::eval::canonical_dump(summary));
  std::printf("-> %s\n", path.c_str());
  return 0;
}

int cmd_gradcheck(int n_seeds, std::uint64_t first_seed, double tolerance) {
  using namespace ser;
  double worst = 0.0;
  std::vector<loss::LossConfig> configs;
  for (double lambda : {0.0, 0.5, 1.0}) {
    for (auto type : {loss::ContrastiveType::loss_1, loss::ContrastiveType::loss_2}) {
      for (auto tap : {loss::Tap::pos_1, loss::Tap::pos_2}) {
        loss::LossConfig c;
        c.lambda = lambda;
        c.type = type;
        c.margin = loss::default_margin(type);
        c.position = tap;
        configs.push_back(c);
        if (lambda == 0.0) break;
      }
      if (lambda == 0.0) break;
    }
  }
  for (int k = 0; k < n_seeds; ++k) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(k);
    for (const auto& c : configs) {
      const auto problem = train::make_gradcheck_problem(train::reduced_dims(), c, {}, seed);
      const auto r = train::check_problem(problem, c, {});
      std::printf("seed %llu lambda %.1f %s %s: max rel error %.3e over %zu parameters (worst #%zu analytic %.3e numeric %.3e)\n",
                  static_cast<unsigned long long>(seed), c.lambda, std::string(loss::to_string(c.type)).c_str(),
                  std::string(loss::to_string(c.position)).c_str(), r.max_rel_error, r.n_checked, r.worst_index,
                  r.worst_analytic, r.worst_numeric);
      worst = std::max(worst, r.max_rel_error);
    }
  }
  std::printf("max relative error %.3e (tolerance %.0e, kernels %s)\n", worst, tolerance,
              std::string(simd::isa_name(simd::active_kernels().isa)).c_str());
  return worst <= tolerance ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech emotion recognition with a siamese CNN"};
  app.require_subcommand(1);

  std::string config_path, out, manifest, cache, kind, checkpoint;
  int n_per_class = 100, fold = 1, n_seeds = 5, runs = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> seed_opt;
  std::optional<double> t_fixed;
  std::optional<std::string> mode;
  std::vector<int> folds;
  std::vector<double> lambdas;
  double min_s = 2.0, max_s = 4.0;
  bool segments = false, save = false;

  auto* synth = app.add_subcommand("synth-corpus", "Write a synthetic four-class corpus");
  synth->add_option("--n-per-class", n_per_class, "Utterances per class")->check(CLI::PositiveNumber);
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--min-seconds", min_s, "Shortest utterance");
  synth->add_option("--max-seconds", max_s, "Longest utterance");

  auto* extract = app.add_subcommand("extract-features", "Fill the feature cache for a manifest");
  extract->add_option("--config", config_path, "Experiment config JSON");
  extract->add_option("--manifest", manifest, "Manifest (overrides the config)");
  extract->add_option("--kind", kind, "mfcc13 or logmel26");
  extract->add_option("--t-fixed", t_fixed, "Signal length in seconds");
  extract->add_option("--cache-dir", cache, "Cache directory (SER_CACHE_DIR takes precedence)");
  extract->add_flag("--segments", segments, "Also cache test segments");

  auto* train = app.add_subcommand("train", "Train one model on one fold");
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  train->add_option("--fold", fold, "Fold (test session) 1..5")->required();
  train->add_option("--seed", seed_opt, "Run seed");
  train->add_option("--out", out, "Output directory");
  train->add_option("--manifest", manifest, "Manifest (overrides the config)");
  train->add_option("--cache-dir", cache, "Cache directory (SER_CACHE_DIR takes precedence)");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a fold's test session");
  evaluate->add_option("--config", config_path, "Experiment config JSON")->required();
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--fold", fold, "Fold (test session) 1..5")->required();
  evaluate->add_option("--mode", mode, "average or crop");
  evaluate->add_option("--seed", seed_opt, "Crop seed (default: the checkpoint's)");
  evaluate->add_option("--out", out, "Report path (default: stdout)");
  evaluate->add_option("--manifest", manifest, "Manifest (overrides the config)");
  evaluate->add_option("--cache-dir", cache, "Cache directory (SER_CACHE_DIR takes precedence)");

  auto* cv = app.add_subcommand("cross-validate", "Five-fold cross-validation over sessions");
  cv->add_option("--config", config_path, "Experiment config JSON")->required();
  cv->add_option("--runs", runs, "Runs per fold (overrides the config)");
  cv->add_option("--folds", folds, "Folds to run (overrides the config)")->delimiter(',');
  cv->add_option("--out", out, "Report path");
  cv->add_flag("--save-checkpoints", save, "Keep every run's checkpoint and history");
  cv->add_option("--manifest", manifest, "Manifest (overrides the config)");
  cv->add_option("--cache-dir", cache, "Cache directory (SER_CACHE_DIR takes precedence)");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the siamese objective on a reduced model");
  gc->add_option("--seeds", n_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  gc->add_option("--seed", seed, "First seed");

  auto* sweep = app.add_subcommand("sweep-lambda", "Cross-validate once per lambda");
  sweep->add_option("--config", config_path, "Experiment config JSON")->required();
  sweep->add_option("--lambdas", lambdas, "Lambda values (overrides the config)")->delimiter(',');
  sweep->add_option("--runs", runs, "Runs per fold (overrides the config)");
  sweep->add_option("--folds", folds, "Folds to run (overrides the config)")->delimiter(',');
  sweep->add_option("--out", out, "Summary path");
  sweep->add_flag("--save-checkpoints", save, "Keep every run's checkpoint and history");
  sweep->add_option("--manifest", manifest, "Manifest (overrides the config)");
  sweep->add_option("--cache-dir", cache, "Cache directory (SER_CACHE_DIR takes precedence)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(n_per_class, out, seed, min_s, max_s);
    if (*gc) return cmd_gradcheck(n_seeds, seed, 1e-4);

    auto cfg = config_or_default(config_path);
    if (!manifest.empty()) cfg.paths.manifest = manifest;
    if (!cache.empty()) cfg.paths.cache_dir = cache;
    if (!kind.empty()) cfg.features.kind = ser::dsp::parse_feature_kind(kind);
    if (t_fixed) cfg.features.t_fixed = *t_fixed;
    if (runs > 0) cfg.train.n_runs = runs;
    if (!folds.empty()) cfg.eval.folds = folds;
    if (!lambdas.empty()) cfg.sweep_lambdas = lambdas;
    ser::eval::validate(cfg);

    if (*extract) return cmd_extract(cfg, segments);
    if (*train) return cmd_train(cfg, fold, seed_opt, out);
    if (*evaluate) return cmd_evaluate(cfg, checkpoint, fold, mode, seed_opt, out);
    if (*cv) return cmd_cross_validate(cfg, out, save);
    if (*sweep) return cmd_sweep(cfg, out, save);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
