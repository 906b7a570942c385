#pragma once

#include <array>
#include <vector>

#include "ser/dsp/features.hpp"
#include "ser/losses/losses.hpp"
#include "ser/nn/model.hpp"

namespace ser::train {

// Two aligned batches of normalized features. y[i] = 1 iff class1[i] == class2[i].
struct PairBatch {
  std::vector<const dsp::FeatureMatrix*> x1, x2;
  std::vector<int> class1, class2;
  std::vector<int> y;
  std::vector<int> aux1, aux2;  // only with an auxiliary task

  std::size_t size() const { return y.size(); }
};

// Fills y from the class labels.
void label_pairs(PairBatch& batch);

struct StepResult {
  double loss = 0.0;
  double contrastive = 0.0;
  double cross_entropy = 0.0;  // mean over both sides
  double auxiliary = 0.0;
  nn::Gradients grads;
  std::array<nn::ForwardCache, 2> caches;  // for the running-statistic update
};

// One siamese step with the single shared weight set: both sides run through
// the same parameters and their gradients are summed.
//   contrastive mode (multitask.task == none):
//     L = lambda * L_con(tap) + (1 - lambda) * L_cro
//   multi-task mode:
//     L = (1 - lambda_mt) * L_cro + lambda_mt * L_aux, no contrastive term.
// L_cro and L_aux are means over all 2 * batch utterances. The contrastive
// function is not evaluated when lambda == 0.
StepResult siamese_step(const PairBatch& batch, const nn::ModelParams& model, const loss::LossConfig& loss_cfg,
                        const loss::MultiTaskConfig& mt_cfg);

// The same objective without gradients.
double siamese_loss(const PairBatch& batch, const nn::ModelParams& model, const loss::LossConfig& loss_cfg,
                    const loss::MultiTaskConfig& mt_cfg);

}  // namespace ser::train
