#pragma once

#include <cstdint>
#include <vector>

#include "ser/dsp/features.hpp"
#include "ser/losses/losses.hpp"
#include "ser/nn/gradcheck.hpp"
#include "ser/nn/model.hpp"
#include "ser/train/siamese.hpp"

namespace ser::train {

// 13 x 40 input, 3 filters per branch, pool kernel 4 / stride 2.
nn::ModelDims reduced_dims();

// A random model and pair batch for checking the full siamese objective.
struct GradCheckProblem {
  nn::ModelParams model;
  std::vector<dsp::FeatureMatrix> inputs;  // 2 * n_pairs matrices
  PairBatch batch;
  int draws = 0;  // data draws until a point clear of kinks was found
};

// Smallest distance to a non-differentiable point of the objective at the
// current parameters: pre-activation zeros, max-pool near-ties between
// positive values, and contrastive hinges. Also returns 0 for a pure
// euclidean objective when a batch-norm channel pools to positive values
// everywhere in the contributing pairs: its beta then has an exactly zero
// gradient that finite differences cannot resolve.
double kink_distance(const GradCheckProblem& p, const loss::LossConfig& loss_cfg);

// Draws inputs (and perturbed batch-norm and bias parameters) from seed until
// kink_distance exceeds min_kink_distance. Pairs alternate same-class and
// cross-class.
GradCheckProblem make_gradcheck_problem(const nn::ModelDims& dims, const loss::LossConfig& loss_cfg,
                                        const loss::MultiTaskConfig& mt_cfg, std::uint64_t seed,
                                        std::size_t n_pairs = 3, double min_kink_distance = 2e-4);

// Analytic gradient of siamese_step against central differences of siamese_loss
// over every trainable parameter.
nn::GradCheckResult check_problem(const GradCheckProblem& p, const loss::LossConfig& loss_cfg,
                                  const loss::MultiTaskConfig& mt_cfg, double h = 1e-5);

}  // namespace ser::train
