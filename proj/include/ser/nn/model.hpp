#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ser/dsp/features.hpp"
#include "ser/nn/layers.hpp"
#include "ser/nn/tensor.hpp"

namespace ser::nn {

// Two parallel conv branches over the same (d x s) input, each
// conv -> batch norm -> ReLU -> max pool, concatenated and fed to one
// fully connected layer.
struct ModelDims {
  std::size_t in_ch = 13;     // feature dimension d
  std::size_t length = 898;   // frames s
  std::size_t filters_a = 100;
  std::size_t kernel_a = 13;
  std::size_t padding_a = 6;
  std::size_t filters_b = 100;
  std::size_t kernel_b = 7;
  std::size_t padding_b = 3;
  std::size_t pool_kernel = 30;
  std::size_t pool_stride = 3;
  std::size_t n_classes = 4;
  std::size_t aux_classes = 0;  // 0: no auxiliary head

  std::size_t conv_length_a() const;
  std::size_t conv_length_b() const;
  std::size_t pooled_length_a() const;
  std::size_t pooled_length_b() const;
  // Size of the concatenated pooled vector (tap pos_1).
  std::size_t pos1_size() const;
};

// Default architecture for a feature config: d from the feature kind, s from
// the fixed signal length.
ModelDims dims_for(const dsp::FeatureConfig& cfg);

// The single weight set shared by both siamese branches.
struct ModelParams {
  ModelDims dims;
  Conv1dParams conv_a;
  Conv1dParams conv_b;
  BatchNormParams bn_a;
  BatchNormParams bn_b;
  LinearParams fc;
  std::optional<LinearParams> aux;  // consumes pos_1
};

// dL/dW, laid out like ModelParams. Batch-norm running statistics are unused.
using Gradients = ModelParams;

// Glorot-uniform weights, zero biases, gamma 1, beta 0, running stats (0, 1).
// The auxiliary head draws after the main weights, so adding one does not
// change the main initialization for a given seed.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);
Gradients zeros_like(const ModelParams& p);

// Trainable arrays in a fixed order: conv_a w,b; bn_a gamma,beta; conv_b w,b;
// bn_b gamma,beta; fc w,b; aux w,b.
std::vector<std::span<double>> trainable_arrays(ModelParams& p);
std::vector<std::span<const double>> trainable_arrays(const ModelParams& p);
std::size_t trainable_count(const ModelParams& p);
std::vector<double> flatten_trainable(const ModelParams& p);
void unflatten_trainable(ModelParams& p, std::span<const double> flat);

struct ForwardCache {
  Tensor input;
  Tensor conv_a, conv_b;
  BatchNormCache bn_a, bn_b;
  Tensor relu_a, relu_b;
  std::vector<std::size_t> argmax_a, argmax_b;
  Tensor pos1;
};

struct ForwardOutput {
  Tensor pos1;    // batch x pos1_size
  Tensor logits;  // batch x n_classes (tap pos_2)
  Tensor probs;   // softmax(logits)
  std::optional<Tensor> aux_logits;
  std::optional<ForwardCache> cache;  // train mode only
};

// Features to network input: batch x d x s (rows of each matrix become columns).
Tensor make_batch(std::span<const dsp::FeatureMatrix* const> features);

// Pure in both modes; train mode uses batch statistics and keeps the cache.
// Running statistics are advanced separately by apply_running_stats.
ForwardOutput forward(const ModelParams& model, const Tensor& x, Mode mode);

void apply_running_stats(ModelParams& model, const ForwardCache& cache);

// Upstream gradients at pos_1, at the logits and (optionally) at the
// auxiliary logits; contributions meet in the shared trunk.
Gradients backward(const ModelParams& model, const ForwardCache& cache, const Tensor& d_pos1,
                   const Tensor& d_logits, const Tensor* d_aux_logits = nullptr);

}  // namespace ser::nn
