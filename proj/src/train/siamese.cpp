#include "ser/train/siamese.hpp"

#include <utility>

#include "ser/error.hpp"

namespace ser::train {

void label_pairs(PairBatch& batch) {
  batch.y.resize(batch.class1.size());
  for (std::size_t i = 0; i < batch.class1.size(); ++i) batch.y[i] = batch.class1[i] == batch.class2[i] ? 1 : 0;
}

namespace {

StepResult run_step(const PairBatch& batch, const nn::ModelParams& model, const loss::LossConfig& loss_cfg,
                    const loss::MultiTaskConfig& mt_cfg, bool with_grads) {
  const std::size_t n = batch.size();
  if (n == 0 || batch.x1.size() != n || batch.x2.size() != n || batch.class1.size() != n ||
      batch.class2.size() != n) {
    throw ShapeError("siamese_step: inconsistent pair batch");
  }
  const bool multitask = mt_cfg.task != loss::AuxTask::none;
  if (multitask && (!model.aux || batch.aux1.size() != n || batch.aux2.size() != n)) {
    throw Error("siamese_step: auxiliary task needs an auxiliary head and labels");
  }

  std::array<nn::ForwardOutput, 2> out = {nn::forward(model, nn::make_batch(batch.x1), nn::Mode::train),
                                          nn::forward(model, nn::make_batch(batch.x2), nn::Mode::train)};
  const std::array<const std::vector<int>*, 2> classes = {&batch.class1, &batch.class2};
  const std::array<const std::vector<int>*, 2> aux = {&batch.aux1, &batch.aux2};

  const double w_cro = multitask ? 1.0 - mt_cfg.lambda : 1.0 - loss_cfg.lambda;
  const double w_aux = multitask ? mt_cfg.lambda : 0.0;
  const double w_con = multitask ? 0.0 : loss_cfg.lambda;

  StepResult r;
  std::array<nn::Tensor, 2> d_logits, d_pos1, d_aux;
  for (int s = 0; s < 2; ++s) {
    // Each side carries half of the 2n-utterance mean.
    r.cross_entropy += 0.5 * loss::softmax_cross_entropy(out[s].probs, *classes[s], with_grads ? &d_logits[s] : nullptr, 0.5 * w_cro);
    d_pos1[s] = nn::Tensor(out[s].pos1.shape);
    if (multitask) {
      auto aux_probs = nn::softmax_rows(*out[s].aux_logits);
      r.auxiliary += 0.5 * loss::softmax_cross_entropy(aux_probs, *aux[s], with_grads ? &d_aux[s] : nullptr, 0.5 * w_aux);
    }
  }

  if (w_con > 0.0) {
    const bool at_pos1 = loss_cfg.position == loss::Tap::pos_1;
    // The euclidean loss sees only differences, in which the output bias cancels.
    std::array<nn::Tensor, 2> unbiased;
    const bool drop_bias = !at_pos1 && loss_cfg.type == loss::ContrastiveType::loss_2;
    if (drop_bias) {
      for (int s = 0; s < 2; ++s) unbiased[s] = nn::linear_forward(out[s].pos1, model.fc, false);
    }
    const nn::Tensor& t1 = at_pos1 ? out[0].pos1 : drop_bias ? unbiased[0] : out[0].logits;
    const nn::Tensor& t2 = at_pos1 ? out[1].pos1 : drop_bias ? unbiased[1] : out[1].logits;
    nn::Tensor g1, g2;
    r.contrastive = loss::pairwise_batch_loss(t1, t2, batch.y, loss_cfg, with_grads ? &g1 : nullptr,
                                              with_grads ? &g2 : nullptr, w_con);
    if (with_grads) {
      auto& dst1 = at_pos1 ? d_pos1[0] : d_logits[0];
      auto& dst2 = at_pos1 ? d_pos1[1] : d_logits[1];
      for (std::size_t i = 0; i < g1.size(); ++i) {
        dst1.data[i] += g1.data[i];
        dst2.data[i] += g2.data[i];
      }
    }
  }

  r.loss = multitask ? loss::multitask_loss(r.cross_entropy, r.auxiliary, mt_cfg.lambda)
                     : loss::combined_loss(r.contrastive, r.cross_entropy, loss_cfg.lambda);
  if (!with_grads) return r;

  for (int s = 0; s < 2; ++s) {
    nn::Gradients g = nn::backward(model, *out[s].cache, d_pos1[s], d_logits[s], multitask ? &d_aux[s] : nullptr);
    if (s == 0) {
      r.grads = std::move(g);
    } else {
      auto dst = nn::trainable_arrays(r.grads);
      auto src = nn::trainable_arrays(std::as_const(g));
      for (std::size_t k = 0; k < dst.size(); ++k) {
        for (std::size_t i = 0; i < dst[k].size(); ++i) dst[k][i] += src[k][i];
      }
    }
    r.caches[s] = std::move(*out[s].cache);
  }
  return r;
}

}  // namespace

StepResult siamese_step(const PairBatch& batch, const nn::ModelParams& model, const loss::LossConfig& loss_cfg,
                        const loss::MultiTaskConfig& mt_cfg) {
  return run_step(batch, model, loss_cfg, mt_cfg, true);
}

double siamese_loss(const PairBatch& batch, const nn::ModelParams& model, const loss::LossConfig& loss_cfg,
                    const loss::MultiTaskConfig& mt_cfg) {
  return run_step(batch, model, loss_cfg, mt_cfg, false).loss;
}

}  // namespace ser::train
