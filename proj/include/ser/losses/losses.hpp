#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "ser/nn/tensor.hpp"

namespace ser::loss {

enum class ContrastiveType { loss_1, loss_2 };  // cosine, euclidean
enum class Tap { pos_1, pos_2 };                // pooled features, logits
enum class Reduction { mean, sum };

std::string_view to_string(ContrastiveType t);
std::string_view to_string(Tap t);
std::string_view to_string(Reduction r);
ContrastiveType parse_contrastive_type(std::string_view s);
Tap parse_tap(std::string_view s);
Reduction parse_reduction(std::string_view s);

// 0.5 for the cosine loss, 1.0 for the euclidean loss.
double default_margin(ContrastiveType t);

struct LossConfig {
  double lambda = 0.0;  // weight of the contrastive term
  double margin = 0.5;
  ContrastiveType type = ContrastiveType::loss_1;
  Tap position = Tap::pos_1;
  Reduction reduction = Reduction::mean;
};

// RangeError on lambda outside [0,1], margin <= 0, or margin >= 1 with loss_1.
void validate(const LossConfig& cfg);

enum class AuxTask { none, gender, valence, activation, dominance };
std::string_view to_string(AuxTask t);
AuxTask parse_aux_task(std::string_view s);
// 2 for gender, 3 for the discretized dimensions, 0 for none.
std::size_t aux_classes(AuxTask t);

struct MultiTaskConfig {
  AuxTask task = AuxTask::none;
  double lambda = 0.0;  // in [0, 0.5]
};

void validate(const MultiTaskConfig& cfg);

// The gradient outputs below are overwritten when non-empty.

// (x1 . x2) / (|x1| |x2|). A zero-norm input yields 0 with zero gradient.
double cosine_similarity(std::span<const double> x1, std::span<const double> x2,
                         std::span<double> d1 = {}, std::span<double> d2 = {});

// y = 1: 1 - cos; y = 0: max(0, cos - m).
double contrastive_loss_1(std::span<const double> x1, std::span<const double> x2, int y, double margin,
                          std::span<double> d1 = {}, std::span<double> d2 = {});

// y = 1: |x1 - x2|; y = 0: max(0, m - |x1 - x2|). Gradient of the norm is 0 at x1 = x2.
double contrastive_loss_2(std::span<const double> x1, std::span<const double> x2, int y, double margin,
                          std::span<double> d1 = {}, std::span<double> d2 = {});

// Per-pair loss reduced over rows of x1/x2 (batch x n). When d1/d2 are given
// they receive scale * d(loss)/d(x) with the same shape as the inputs.
double pairwise_batch_loss(const nn::Tensor& x1, const nn::Tensor& x2, std::span<const int> y,
                           const LossConfig& cfg, nn::Tensor* d1 = nullptr, nn::Tensor* d2 = nullptr,
                           double scale = 1.0);

// Number of pairwise_batch_loss evaluations in this process.
std::uint64_t contrastive_evaluations();

inline constexpr double kProbFloor = 1e-12;

// -sum p_i ln max(q_i, 1e-12)
double cross_entropy(std::span<const double> p, std::span<const double> q);

// Mean over rows of -ln q[label]. When d_logits is given it receives
// scale * (q - onehot) / batch, the gradient through the softmax.
double softmax_cross_entropy(const nn::Tensor& probs, std::span<const int> labels, nn::Tensor* d_logits = nullptr,
                             double scale = 1.0);

// lambda * L_con + (1 - lambda) * L_cro
double combined_loss(double contrastive, double cross_entropy, double lambda);

// (1 - lambda) * L_baseline + lambda * L_addition
double multitask_loss(double baseline, double addition, double lambda);

}  // namespace ser::loss
