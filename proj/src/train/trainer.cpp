#include "ser/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "ser/error.hpp"
#include "ser/eval/metrics.hpp"
#include "ser/train/optim.hpp"
#include "ser/train/siamese.hpp"

namespace ser::train {

namespace {

constexpr std::size_t kEvalBatch = 32;

struct Split {
  std::vector<dsp::FeatureMatrix> x;
  std::vector<int> y;
  std::vector<int> aux;

  std::vector<const dsp::FeatureMatrix*> ptrs() const {
    std::vector<const dsp::FeatureMatrix*> p;
    for (const auto& fm : x) p.push_back(&fm);
    return p;
  }
};

struct ValScore {
  double loss = 0.0;
  double wa = 0.0;
  double uwa = 0.0;
};

ValScore score(const nn::ModelParams& model, const Split& split) {
  ValScore s;
  if (split.x.empty()) return s;
  eval::Confusion confusion;
  double total = 0.0;
  const auto all = split.ptrs();
  for (std::size_t start = 0; start < all.size(); start += kEvalBatch) {
    const std::size_t end = std::min(all.size(), start + kEvalBatch);
    std::span<const dsp::FeatureMatrix* const> chunk(all.data() + start, end - start);
    const auto out = nn::forward(model, nn::make_batch(chunk), nn::Mode::eval);
    std::span<const int> labels(split.y.data() + start, end - start);
    total += loss::softmax_cross_entropy(out.probs, labels) * static_cast<double>(end - start);
    for (std::size_t i = 0; i < labels.size(); ++i) confusion.add(labels[i], eval::argmax(out.probs.slice(i)));
  }
  s.loss = total / static_cast<double>(all.size());
  s.wa = eval::weighted_accuracy(confusion);
  s.uwa = eval::unweighted_accuracy(confusion);
  return s;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  loss::validate(cfg.loss);
  loss::validate(cfg.multitask);
  if (cfg.batch_size < 1) throw RangeError("batch_size must be >= 1");
  if (!(cfg.lr0 > 0.0)) throw RangeError("lr0 must be positive");
  if (cfg.max_epochs < 1) throw RangeError("max_epochs must be >= 1");
  if (cfg.plateau_patience < 1 || cfg.early_stop_patience < 1) throw RangeError("patience values must be >= 1");
  if (cfg.n_runs < 1) throw RangeError("n_runs must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), 0x5eedu};
  std::mt19937_64 rng(seq);
  return rng();
}

int aux_label(const data::UtteranceRecord& r, loss::AuxTask task) {
  auto dimension = [&](const std::optional<double>& v) {
    if (!v) throw ValidationError("missing label");
    return static_cast<int>(data::discretize_dimension(*v));
  };
  switch (task) {
    case loss::AuxTask::none: return 0;
    case loss::AuxTask::gender:
      if (!r.gender) throw ValidationError("missing label");
      return *r.gender == data::Gender::male ? 0 : 1;
    case loss::AuxTask::valence: return dimension(r.valence);
    case loss::AuxTask::activation: return dimension(r.activation);
    case loss::AuxTask::dominance: return dimension(r.dominance);
  }
  return 0;
}

RunResult train(const data::FoldSplit& fold, const data::Corpus& corpus, const FeatureLookup& features,
                const nn::ModelDims& base_dims, const TrainConfig& cfg) {
  validate(cfg);
  const auto task = cfg.multitask.task;
  const bool multitask = task != loss::AuxTask::none;

  std::unordered_map<std::string, const data::UtteranceRecord*> by_id;
  for (const auto& r : corpus.records) by_id[r.id] = &r;
  auto record = [&](const std::string& id) -> const data::UtteranceRecord& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("fold references unknown id '" + id + "'");
    return *it->second;
  };

  if (multitask) {
    std::string missing;
    for (const auto* ids : {&fold.train_ids, &fold.validation_ids}) {
      for (const auto& id : *ids) {
        try {
          aux_label(record(id), task);
        } catch (const ValidationError&) {
          missing += (missing.empty() ? "" : ", ") + id;
        }
      }
    }
    if (!missing.empty()) {
      throw ValidationError("auxiliary task '" + std::string(loss::to_string(task)) + "' label missing for: " + missing);
    }
  }

  std::vector<const dsp::FeatureMatrix*> raw_train;
  for (const auto& id : fold.train_ids) raw_train.push_back(&features(id));
  RunResult result;
  result.seed = cfg.seed;
  result.norm = dsp::compute_norm_stats(raw_train);

  auto build = [&](const std::vector<std::string>& ids) {
    Split s;
    for (const auto& id : ids) {
      const auto& r = record(id);
      s.x.push_back(dsp::apply_norm(features(id), result.norm));
      s.y.push_back(static_cast<int>(r.emotion));
      s.aux.push_back(multitask ? aux_label(r, task) : 0);
    }
    return s;
  };
  const Split train_set = build(fold.train_ids);
  const Split val_set = build(fold.validation_ids);

  nn::ModelDims dims = base_dims;
  dims.aux_classes = loss::aux_classes(task);
  nn::ModelParams model = init_params(dims, derive_seed(cfg.seed, 1));
  AdamState adam = make_adam_state(model);
  PlateauScheduler scheduler(cfg.plateau_patience);
  const std::uint64_t sampler_seed = derive_seed(cfg.seed, 2);

  double lr = cfg.lr0;
  double best_val = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  result.model = model;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<IndexPair> pairs =
        cfg.sampler == Sampler::loader_1
            ? loader_1(train_set.x.size(), sampler_seed, static_cast<std::uint64_t>(epoch))
            : loader_2(train_set.y, data::kNumEmotions, sampler_seed, static_cast<std::uint64_t>(epoch),
                       cfg.loader2_pairs)
                  .pairs;

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(pairs.size(), start + cfg.batch_size);
      PairBatch batch;
      for (std::size_t i = start; i < end; ++i) {
        const auto [a, b] = pairs[i];
        batch.x1.push_back(&train_set.x[a]);
        batch.x2.push_back(&train_set.x[b]);
        batch.class1.push_back(train_set.y[a]);
        batch.class2.push_back(train_set.y[b]);
        if (multitask) {
          batch.aux1.push_back(train_set.aux[a]);
          batch.aux2.push_back(train_set.aux[b]);
        }
      }
      label_pairs(batch);
      StepResult step = siamese_step(batch, model, cfg.loss, cfg.multitask);
      adam_step(model, step.grads, adam, lr);
      for (const auto& cache : step.caches) nn::apply_running_stats(model, cache);
      loss_sum += step.loss * static_cast<double>(end - start);
    }
    result.optimizer_updates = adam.t;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(pairs.size());
    rec.lr = lr;
    const ValScore val = val_set.x.empty() ? ValScore{rec.train_loss, 0.0, 0.0} : score(model, val_set);
    rec.val_loss = val.loss;
    rec.val_wa = val.wa;
    rec.val_uwa = val.uwa;
    result.history.push_back(rec);

    if (val.loss < best_val) {
      best_val = val.loss;
      bad_epochs = 0;
      result.model = model;
      result.best_epoch = epoch;
    } else if (++bad_epochs >= cfg.early_stop_patience) {
      break;
    }
    lr = scheduler.step(val.loss, lr);
  }
  return result;
}

RunResult train_multitask(const data::FoldSplit& fold, const data::Corpus& corpus, const FeatureLookup& features,
                          const nn::ModelDims& dims, const TrainConfig& cfg) {
  if (cfg.multitask.task == loss::AuxTask::none) throw ValidationError("train_multitask: no auxiliary task set");
  return train(fold, corpus, features, dims, cfg);
}

}  // namespace ser::train
