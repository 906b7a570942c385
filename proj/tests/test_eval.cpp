#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <set>

#include "ser/data/manifest.hpp"
#include "ser/data/synth.hpp"
#include "ser/error.hpp"
#include "ser/eval/canonical.hpp"
#include "ser/eval/config.hpp"
#include "ser/eval/crossval.hpp"
#include "ser/eval/features_store.hpp"
#include "ser/eval/metrics.hpp"
#include "ser/eval/predict.hpp"
#include "ser/eval/report.hpp"

using namespace ser;
using namespace ser::eval;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Confusion confusion_from(std::initializer_list<std::array<std::int64_t, 4>> rows) {
  Confusion c;
  int i = 0;
  for (const auto& r : rows) c.counts[static_cast<std::size_t>(i++)] = r;
  return c;
}

Waveform wave_of_seconds(double seconds, std::uint64_t seed) {
  Waveform w;
  w.samples = data::synthesize_utterance(data::Emotion::sad, static_cast<std::size_t>(seconds * kSampleRate), seed);
  w.original_length = w.samples.size();
  return w;
}

nn::ModelDims small_model(const dsp::FeatureConfig& f) {
  auto d = nn::dims_for(f);
  d.filters_a = 4;
  d.filters_b = 4;
  return d;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ser_test_eval_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("accuracy metrics") {
  Confusion diag = confusion_from({{{5, 0, 0, 0}}, {{0, 3, 0, 0}}, {{0, 0, 7, 0}}, {{0, 0, 0, 1}}});
  CHECK(weighted_accuracy(diag) == 1.0);
  CHECK(unweighted_accuracy(diag) == 1.0);

  Confusion all3 = confusion_from({{{0, 0, 0, 10}}, {{0, 0, 0, 10}}, {{0, 0, 0, 10}}, {{0, 0, 0, 70}}});
  CHECK(weighted_accuracy(all3) == doctest::Approx(0.7));
  CHECK(unweighted_accuracy(all3) == doctest::Approx(0.25));
  auto rec = per_class_recall(all3);
  CHECK(rec == std::array<double, 4>{0, 0, 0, 1});

  // classes without test samples leave the UWA mean
  Confusion missing = confusion_from({{{3, 1, 0, 0}}, {{0, 0, 0, 0}}, {{0, 0, 2, 2}}, {{0, 0, 0, 0}}});
  CHECK(unweighted_accuracy(missing) == doctest::Approx((0.75 + 0.5) / 2));
  CHECK_THROWS(weighted_accuracy(Confusion{}));
  CHECK_THROWS(unweighted_accuracy(Confusion{}));

  Confusion eq = confusion_from({{{4, 1, 0, 0}}, {{2, 3, 0, 0}}, {{0, 0, 5, 0}}, {{1, 1, 1, 2}}});
  CHECK(weighted_accuracy(eq) == doctest::Approx(unweighted_accuracy(eq)));

  Confusion sum = diag;
  sum += all3;
  CHECK(sum.total() == diag.total() + all3.total());
  CHECK(sum.row_total(3) == 71);
  Confusion c;
  c.add(2, 1);
  c.add(2, 2);
  CHECK(c.counts[2][1] == 1);
  CHECK(c.row_total(2) == 2);
}

TEST_CASE("metrics stay within [0,1] on random confusions") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    Confusion c;
    for (auto& row : c.counts) {
      for (auto& v : row) v = static_cast<std::int64_t>(rng() % 20);
    }
    if (c.total() == 0) continue;
    const double wa = weighted_accuracy(c), uwa = unweighted_accuracy(c);
    CHECK(wa >= 0.0);
    CHECK(wa <= 1.0);
    CHECK(uwa >= 0.0);
    CHECK(uwa <= 1.0);
    std::int64_t trace = 0;
    for (int k = 0; k < 4; ++k) trace += c.counts[k][k];
    CHECK(wa == doctest::Approx(static_cast<double>(trace) / static_cast<double>(c.total())));
  }
}

TEST_CASE("argmax tie rule") {
  CHECK(argmax(std::vector<double>{0.4, 0.4, 0.1, 0.1}) == 0);
  CHECK(argmax(std::vector<double>{0.1, 0.3, 0.3, 0.3}) == 1);
  CHECK(argmax(std::vector<double>{0.0, 0.0, 0.0, 1.0}) == 3);
}

TEST_CASE("separation diagnostics") {
  nn::Tensor same({4, 3}, 1.0);
  std::vector<int> two_two = {0, 0, 1, 1};
  auto s = separation_diagnostics(same, two_two);
  CHECK(s.mean_intra == doctest::Approx(0.0));

  nn::Tensor axes({4, 2});
  axes.data = {1, 0, 2, 0, 0, 1, 0, 3};
  s = separation_diagnostics(axes, two_two);
  CHECK(s.mean_intra == doctest::Approx(0.0));
  CHECK(s.mean_inter == doctest::Approx(1.0));
  CHECK(s.separation_ratio == doctest::Approx(0.0));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  nn::Tensor emb({300, 8});
  for (auto& v : emb.data) v = g(rng);
  std::vector<int> labels(300);
  for (auto& l : labels) l = static_cast<int>(rng() % 4);
  s = separation_diagnostics(emb, labels);
  CHECK(s.separation_ratio == doctest::Approx(1.0).epsilon(0.05));

  std::vector<int> one_class = {0, 0, 0, 0};
  CHECK_THROWS(separation_diagnostics(axes, one_class));
  std::vector<int> singletons = {0, 1, 2, 3};
  CHECK_THROWS(separation_diagnostics(axes, singletons));
}

TEST_CASE("segmentation") {
  auto nine = segment_utterance(wave_of_seconds(9.0, 1), 9.0);
  CHECK(nine.size() == 1);
  auto eighteen = segment_utterance(wave_of_seconds(18.0, 2), 9.0);
  REQUIRE(eighteen.size() == 2);
  CHECK(eighteen[1].samples.size() == 144000);
  auto four = segment_utterance(wave_of_seconds(4.0, 3), 9.0);
  REQUIRE(four.size() == 1);
  CHECK(four[0].samples.size() == 144000);
  CHECK(four[0].original_length == 64000);
  CHECK(std::all_of(four[0].samples.begin() + 64000, four[0].samples.end(), [](double v) { return v == 0.0; }));

  auto w = wave_of_seconds(5.5, 4);
  auto parts = segment_utterance(w, 2.0);
  REQUIRE(parts.size() == 3);
  CHECK(parts[2].original_length == 24000);
  CHECK(std::equal(parts[1].samples.begin(), parts[1].samples.end(), w.samples.begin() + 32000));
}

TEST_CASE("prediction combination") {
  std::vector<Probs> one = {{0.1, 0.5, 0.3, 0.1}};
  auto p = average_prediction(one);
  CHECK(p.probs == one[0]);
  CHECK(p.label == 1);

  std::vector<Probs> same = {{0.1, 0.2, 0.3, 0.4}, {0.1, 0.2, 0.3, 0.4}};
  p = average_prediction(same);
  for (int k = 0; k < 4; ++k) CHECK(p.probs[k] == doctest::Approx(same[0][k]));

  std::vector<Probs> tie = {{0.6, 0.2, 0.1, 0.1}, {0.2, 0.6, 0.1, 0.1}};
  p = average_prediction(tie);
  CHECK(p.probs[0] == doctest::Approx(0.4));
  CHECK(p.probs[1] == doctest::Approx(0.4));
  CHECK(p.probs[2] == doctest::Approx(0.1));
  CHECK(p.label == 0);
  std::swap(tie[0], tie[1]);
  CHECK(average_prediction(tie).label == 0);

  CHECK(crop_prediction(one, 77).probs == one[0]);
  std::vector<Probs> many(7);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = {0, 0, 0, static_cast<double>(i)};
  std::set<std::size_t> chosen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto idx = crop_index(7, seed);
    CHECK(idx < 7);
    CHECK(crop_index(7, seed) == idx);
    const auto cp = crop_prediction(many, seed);
    CHECK(cp.segment == idx);
    CHECK(cp.probs == many[idx]);
    chosen.insert(idx);
  }
  CHECK(chosen.size() == 7);
}

TEST_CASE("model-level predictions") {
  dsp::FeatureConfig f;
  f.t_fixed = 1.0;
  auto model = nn::init_params(small_model(f), 3);
  auto w = wave_of_seconds(3.4, 5);
  auto segs = segment_features(w, f);
  REQUIRE(segs.size() == 4);
  std::vector<const dsp::FeatureMatrix*> ptrs;
  for (const auto& s : segs) ptrs.push_back(&s);
  auto stats = dsp::compute_norm_stats(ptrs);

  auto avg = predict_average(model, w, stats, f);
  CHECK(avg.n_segments == 4);
  double total = 0;
  for (double v : avg.probs) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<dsp::FeatureMatrix> normed;
  for (const auto& s : segs) normed.push_back(dsp::apply_norm(s, stats));
  auto per = segment_probs(model, normed);
  REQUIRE(per.size() == 4);
  std::reverse(per.begin(), per.end());
  auto rev = average_prediction(per);
  for (int k = 0; k < 4; ++k) CHECK(rev.probs[k] == doctest::Approx(avg.probs[k]).epsilon(1e-12));

  auto crop = predict_crop(model, w, stats, f, 9);
  CHECK(crop.segment < 4);
  CHECK(crop.probs == predict_crop(model, w, stats, f, 9).probs);

  auto short_w = wave_of_seconds(0.7, 6);
  auto a = predict_average(model, short_w, stats, f);
  auto c = predict_crop(model, short_w, stats, f, 123);
  CHECK(a.n_segments == 1);
  CHECK(a.probs == c.probs);
  CHECK(a.label == c.label);
}

TEST_CASE("canonical json") {
  json j = {{"b", 1.0}, {"a", {{"z", std::vector<int>{1, 2, 3}}, {"y", "s"}}}, {"n", -0.0}, {"i", 7},
            {"inf", std::numeric_limits<double>::infinity()}, {"f", 0.1234567}, {"flag", true}};
  const std::string out = canonical_dump(j);
  CHECK(out ==
        "{\n"
        "  \"a\": {\n"
        "    \"y\": \"s\",\n"
        "    \"z\": [1, 2, 3]\n"
        "  },\n"
        "  \"b\": 1.000000,\n"
        "  \"f\": 0.123457,\n"
        "  \"flag\": true,\n"
        "  \"i\": 7,\n"
        "  \"inf\": null,\n"
        "  \"n\": 0.000000\n"
        "}\n");
  CHECK(json::parse(out)["f"].get<double>() == doctest::Approx(0.123457));
  CHECK(canonical_dump(json::parse(out)) == out);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("config parsing is strict and hashes ignore paths") {
  json j = {{"features", {{"kind", "logmel26"}, {"t_fixed", 4.0}}},
            {"loss", {{"lambda", 0.7}, {"type", "loss_2"}, {"position", "pos_2"}}},
            {"train", {{"sampler", "loader_2"}, {"n_runs", 3}}},
            {"eval", {{"mode", "crop"}, {"folds", {2, 4}}}},
            {"paths", {{"manifest", "m.jsonl"}}}};
  auto cfg = config_from_json(j);
  CHECK(cfg.features.kind == dsp::FeatureKind::logmel26);
  CHECK(cfg.train.loss.margin == 1.0);
  CHECK(cfg.train.loss.position == loss::Tap::pos_2);
  CHECK(cfg.train.sampler == train::Sampler::loader_2);
  CHECK(cfg.eval.mode == PredictionMode::crop);
  CHECK(cfg.eval.folds == std::vector<int>{2, 4});
  auto dims = resolved_dims(cfg);
  CHECK(dims.in_ch == 26);
  CHECK(dims.length == 398);

  auto back = config_from_json(config_to_json(cfg));
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(canonical_dump(config_to_json(back)) == canonical_dump(config_to_json(cfg)));

  auto moved = cfg;
  moved.paths.out_dir = "/elsewhere";
  moved.paths.manifest = "other.jsonl";
  CHECK(config_hash(moved) == config_hash(cfg));
  auto changed = cfg;
  changed.train.loss.lambda = 0.8;
  CHECK(config_hash(changed) != config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);

  CHECK_THROWS_AS(config_from_json({{"featurez", json::object()}}), ValidationError);
  CHECK_THROWS_AS(config_from_json({{"loss", {{"lamda", 0.5}}}}), ValidationError);
  CHECK_THROWS_AS(config_from_json({{"loss", {{"lambda", "high"}}}}), ValidationError);
  CHECK_THROWS(config_from_json({{"loss", {{"lambda", 1.5}}}}));
  CHECK_THROWS(config_from_json({{"features", {{"t_fixed", 20.0}}}}));
  CHECK(config_from_json(json::object()).train.loss.margin == 0.5);
}

TEST_CASE("cache directory resolution") {
  ExperimentConfig cfg;
  cfg.paths.out_dir = "/tmp/o";
  ::unsetenv("SER_CACHE_DIR");
  CHECK(cache_dir(cfg) == fs::path("/tmp/o/cache"));
  cfg.paths.cache_dir = "/tmp/c";
  CHECK(cache_dir(cfg) == fs::path("/tmp/c"));
  ::setenv("SER_CACHE_DIR", "/tmp/env", 1);
  CHECK(cache_dir(cfg) == fs::path("/tmp/env"));
  ::unsetenv("SER_CACHE_DIR");
}

TEST_CASE("report json") {
  Confusion c = confusion_from({{{2, 0, 0, 0}}, {{0, 1, 1, 0}}, {{0, 0, 2, 0}}, {{1, 0, 0, 1}}});
  auto r = make_report(3, c, PredictionMode::crop, 11, "abc");
  CHECK(r.n_test == 8);
  CHECK(r.weighted_accuracy == doctest::Approx(0.75));
  CHECK(r.unweighted_accuracy == doctest::Approx(0.75));
  auto j = to_json(r);
  CHECK(j["fold_index"] == 3);
  CHECK(j["prediction_mode"] == "crop");
  CHECK(j["config_hash"] == "abc");
  CHECK(j["confusion"][3][0] == 1);
  std::int64_t rows = 0;
  for (int k = 0; k < 4; ++k) rows += c.row_total(k);
  CHECK(rows == r.n_test);

  std::vector<train::EpochRecord> hist = {{1, 1.5, 1.2, 0.5, 0.4, 1e-4}, {2, 1.0, 1.1, 0.6, 0.5, 1e-4}};
  auto h = history_to_json(hist);
  REQUIRE(h.is_array());
  CHECK(h.size() == 2);
  CHECK(h[1]["epoch"] == 2);
}

TEST_CASE("feature store caches per utterance") {
  const auto dir = scratch("store");
  data::SynthOptions opts;
  opts.n_per_class = 2;
  opts.min_seconds = 1.0;
  opts.max_seconds = 2.5;
  opts.seed = 4;
  auto corpus = data::generate_synthetic_corpus(opts, dir / "corpus");
  dsp::FeatureConfig f;
  f.t_fixed = 1.0;

  FeatureStore first(corpus, f, dir / "cache");
  const auto id = corpus.records[0].id;
  const auto a = first.utterance(id);
  const auto segs = first.segments(id);
  CHECK(first.extracted() >= 1);
  CHECK(first.cache_hits() == 0);
  REQUIRE(first.cache_dir());
  CHECK(first.cache_dir()->filename().string().rfind("mfcc13_t1.00_", 0) == 0);

  FeatureStore second(corpus, f, dir / "cache");
  CHECK(second.utterance(id).data == a.data);
  CHECK(second.segments(id).size() == segs.size());
  CHECK(second.extracted() == 0);
  CHECK(second.cache_hits() >= 2);

  FeatureStore memory_only(corpus, f);
  CHECK(memory_only.utterance(id).data == a.data);
  CHECK(!memory_only.cache_dir());

  auto g = f;
  g.t_fixed = 2.0;
  CHECK(feature_key(g) != feature_key(f));
  CHECK_THROWS(first.utterance("no-such-id"));
}

TEST_CASE("cross-validation on a tiny corpus is deterministic") {
  const auto dir = scratch("cv");
  data::SynthOptions opts;
  opts.n_per_class = 10;
  opts.min_seconds = 1.0;
  opts.max_seconds = 1.8;
  opts.seed = 5;
  auto corpus = data::generate_synthetic_corpus(opts, dir / "corpus");

  ExperimentConfig cfg;
  cfg.features.t_fixed = 1.0;
  cfg.model.filters_a = 4;
  cfg.model.filters_b = 4;
  cfg.train.max_epochs = 2;
  cfg.train.n_runs = 1;
  cfg.train.seed = 9;
  cfg.train.loss.lambda = 0.5;

  std::vector<std::pair<int, int>> calls;
  FeatureStore store(corpus, cfg.features, dir / "cache");
  auto res = cross_validate(corpus, store, cfg,
                            [&](int fold, int run, const train::RunResult&, const RunSummary&) {
                              calls.emplace_back(fold, run);
                            });
  REQUIRE(res.folds.size() == 5);
  CHECK(calls.size() == 5);
  std::set<int> folds;
  Confusion pooled;
  for (const auto& f : res.folds) {
    folds.insert(f.report.fold_index);
    pooled += f.report.confusion;
    REQUIRE(f.runs.size() == 1);
    CHECK(f.runs[0].report.config_hash == res.config_hash);
    std::int64_t session_count = 0;
    for (const auto& r : corpus.records) session_count += r.session == f.report.fold_index;
    CHECK(f.report.n_test == session_count);
    CHECK(f.runs[0].report.separation.has_value());
  }
  CHECK(folds == std::set<int>{1, 2, 3, 4, 5});
  CHECK(pooled.counts == res.pooled.counts);
  CHECK(res.weighted_accuracy == doctest::Approx(weighted_accuracy(pooled)));
  CHECK(res.unweighted_accuracy == doctest::Approx(unweighted_accuracy(pooled)));
  CHECK(res.config_hash == config_hash(cfg));

  // second pass reads every feature from the cache
  FeatureStore cached(corpus, cfg.features, dir / "cache");
  auto again = cross_validate(corpus, cached, cfg);
  CHECK(cached.extracted() == 0);
  CHECK(canonical_dump(to_json(again)) == canonical_dump(to_json(res)));

  CHECK(run_seed(9, 1, 0) != run_seed(9, 2, 0));
  CHECK(run_seed(9, 1, 0) != run_seed(9, 1, 1));
  CHECK(run_seed(9, 3, 2) == run_seed(9, 3, 2));
}
