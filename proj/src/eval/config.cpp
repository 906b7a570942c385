#include "ser/eval/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "ser/error.hpp"
#include "ser/eval/canonical.hpp"

namespace ser::eval {

using nlohmann::json;

namespace {

// Reads keys from one section and reports any it did not consume.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ValidationError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  json sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? j_.at(key) : json::object();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError("config: unknown key '" + name_ + "." + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

template <typename Parse>
void get_enum(Section& s, const char* key, Parse parse) {
  std::string text;
  s.get(key, text);
  if (!text.empty()) parse(text);
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  Section root(j, "config");

  {
    const json fj = root.sub("features");
    Section s(fj, "features");
    get_enum(s, "kind", [&](const std::string& t) { cfg.features.kind = dsp::parse_feature_kind(t); });
    s.get("t_fixed", cfg.features.t_fixed);
    s.get("frame_len", cfg.features.frame_len);
    s.get("hop", cfg.features.hop);
    s.get("fft_size", cfg.features.fft_size);
    s.get("n_mels", cfg.features.n_mels);
    s.get("mel_fmin", cfg.features.mel_fmin);
    s.get("mel_fmax", cfg.features.mel_fmax);
    s.get("n_mfcc", cfg.features.n_mfcc);
    s.get("log_floor", cfg.features.log_floor);
    s.finish();
  }
  {
    const json mj = root.sub("model");
    Section s(mj, "model");
    s.get("filters_a", cfg.model.filters_a);
    s.get("kernel_a", cfg.model.kernel_a);
    s.get("padding_a", cfg.model.padding_a);
    s.get("filters_b", cfg.model.filters_b);
    s.get("kernel_b", cfg.model.kernel_b);
    s.get("padding_b", cfg.model.padding_b);
    s.get("pool_kernel", cfg.model.pool_kernel);
    s.get("pool_stride", cfg.model.pool_stride);
    s.finish();
  }
  {
    const json tj = root.sub("train");
    Section s(tj, "train");
    auto& t = cfg.train;
    get_enum(s, "sampler", [&](const std::string& v) { t.sampler = train::parse_sampler(v); });
    s.get("batch_size", t.batch_size);
    s.get("max_epochs", t.max_epochs);
    s.get("lr0", t.lr0);
    s.get("plateau_patience", t.plateau_patience);
    s.get("early_stop_patience", t.early_stop_patience);
    s.get("seed", t.seed);
    s.get("n_runs", t.n_runs);
    s.get("loader2_pairs", t.loader2_pairs);
    s.finish();
  }
  {
    const json lj = root.sub("loss");
    Section s(lj, "loss");
    auto& l = cfg.train.loss;
    s.get("lambda", l.lambda);
    get_enum(s, "type", [&](const std::string& v) { l.type = loss::parse_contrastive_type(v); });
    get_enum(s, "position", [&](const std::string& v) { l.position = loss::parse_tap(v); });
    get_enum(s, "reduction", [&](const std::string& v) { l.reduction = loss::parse_reduction(v); });
    l.margin = loss::default_margin(l.type);
    s.get("margin", l.margin);
    s.finish();
  }
  {
    const json mj = root.sub("multitask");
    Section s(mj, "multitask");
    get_enum(s, "task", [&](const std::string& v) { cfg.train.multitask.task = loss::parse_aux_task(v); });
    s.get("lambda", cfg.train.multitask.lambda);
    s.finish();
  }
  {
    const json ej = root.sub("eval");
    Section s(ej, "eval");
    get_enum(s, "mode", [&](const std::string& v) { cfg.eval.mode = parse_prediction_mode(v); });
    s.get("validation_fraction", cfg.eval.validation_fraction);
    s.get("folds", cfg.eval.folds);
    s.get("improvised_only", cfg.eval.improvised_only);
    s.finish();
  }
  {
    const json pj = root.sub("paths");
    Section s(pj, "paths");
    s.get("manifest", cfg.paths.manifest);
    s.get("out_dir", cfg.paths.out_dir);
    s.get("cache_dir", cfg.paths.cache_dir);
    s.finish();
  }
  {
    const json sj = root.sub("sweep");
    Section s(sj, "sweep");
    s.get("lambdas", cfg.sweep_lambdas);
    s.finish();
  }
  root.finish();
  validate(cfg);
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& f = cfg.features;
  const auto& m = cfg.model;
  const auto& t = cfg.train;
  return {
      {"features",
       {{"kind", dsp::to_string(f.kind)},
        {"t_fixed", f.t_fixed},
        {"frame_len", f.frame_len},
        {"hop", f.hop},
        {"fft_size", f.fft_size},
        {"n_mels", f.n_mels},
        {"mel_fmin", f.mel_fmin},
        {"mel_fmax", f.mel_fmax},
        {"n_mfcc", f.n_mfcc},
        {"log_floor", f.log_floor}}},
      {"model",
       {{"filters_a", m.filters_a},
        {"kernel_a", m.kernel_a},
        {"padding_a", m.padding_a},
        {"filters_b", m.filters_b},
        {"kernel_b", m.kernel_b},
        {"padding_b", m.padding_b},
        {"pool_kernel", m.pool_kernel},
        {"pool_stride", m.pool_stride}}},
      {"train",
       {{"sampler", train::to_string(t.sampler)},
        {"batch_size", t.batch_size},
        {"max_epochs", t.max_epochs},
        {"lr0", t.lr0},
        {"plateau_patience", t.plateau_patience},
        {"early_stop_patience", t.early_stop_patience},
        {"seed", t.seed},
        {"n_runs", t.n_runs},
        {"loader2_pairs", t.loader2_pairs}}},
      {"loss",
       {{"lambda", t.loss.lambda},
        {"margin", t.loss.margin},
        {"type", loss::to_string(t.loss.type)},
        {"position", loss::to_string(t.loss.position)},
        {"reduction", loss::to_string(t.loss.reduction)}}},
      {"multitask", {{"task", loss::to_string(t.multitask.task)}, {"lambda", t.multitask.lambda}}},
      {"eval",
       {{"mode", to_string(cfg.eval.mode)},
        {"validation_fraction", cfg.eval.validation_fraction},
        {"folds", cfg.eval.folds},
        {"improvised_only", cfg.eval.improvised_only}}},
      {"paths", {{"manifest", cfg.paths.manifest}, {"out_dir", cfg.paths.out_dir}, {"cache_dir", cfg.paths.cache_dir}}},
      {"sweep", {{"lambdas", cfg.sweep_lambdas}}},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

void validate(const ExperimentConfig& cfg) {
  dsp::validate(cfg.features);
  train::validate(cfg.train);
  if (!(cfg.eval.validation_fraction > 0.0 && cfg.eval.validation_fraction < 0.5)) {
    throw RangeError("validation_fraction must lie in (0, 0.5)");
  }
  if (cfg.eval.folds.empty()) throw ValidationError("eval.folds is empty");
  for (int f : cfg.eval.folds) {
    if (f < 1 || f > 5) throw RangeError("fold indices must lie in 1..5");
  }
  for (double l : cfg.sweep_lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw RangeError("sweep lambdas must lie in [0, 1]");
  }
  (void)resolved_dims(cfg).pos1_size();  // ShapeError when the model does not fit T_fixed
}

nn::ModelDims resolved_dims(const ExperimentConfig& cfg) {
  nn::ModelDims d = cfg.model;
  const nn::ModelDims from_features = nn::dims_for(cfg.features);
  d.in_ch = from_features.in_ch;
  d.length = from_features.length;
  return d;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("paths");
  return hex64(fnv1a64(canonical_dump(j)));
}

std::filesystem::path cache_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("SER_CACHE_DIR"); env && *env) return env;
  if (!cfg.paths.cache_dir.empty()) return cfg.paths.cache_dir;
  return std::filesystem::path(cfg.paths.out_dir) / "cache";
}

}  // namespace ser::eval
