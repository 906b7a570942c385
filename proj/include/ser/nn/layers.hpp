#pragma once

// Layer kernels with hand-written adjoints. Activations are batch-major:
// conv/batch-norm/pool tensors are (batch x channels x length), dense tensors
// are (batch x features).

#include <cstddef>
#include <span>
#include <vector>

#include "ser/nn/tensor.hpp"

namespace ser::nn {

enum class Mode { train, eval };

struct Conv1dParams {
  std::size_t out_ch = 0;
  std::size_t in_ch = 0;
  std::size_t kernel = 0;
  std::size_t padding = 0;
  std::size_t stride = 1;
  std::vector<double> weight;  // out_ch x in_ch x kernel
  std::vector<double> bias;    // out_ch

  std::size_t output_length(std::size_t length) const;
};

struct BatchNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  std::size_t channels() const { return gamma.size(); }
};

struct LinearParams {
  std::size_t n_out = 0;
  std::size_t n_in = 0;
  std::vector<double> weight;  // n_out x n_in
  std::vector<double> bias;    // n_out
};

Conv1dParams make_conv1d(std::size_t out_ch, std::size_t in_ch, std::size_t kernel, std::size_t padding,
                         std::size_t stride = 1);
BatchNormParams make_batchnorm(std::size_t channels);
LinearParams make_linear(std::size_t n_out, std::size_t n_in);

// Cross-correlation (no kernel flip) with zero padding.
Tensor conv1d_forward(const Tensor& x, const Conv1dParams& p, bool add_bias = true);
// Accumulates into grad (same layout as p). dx is skipped when null.
void conv1d_backward(const Tensor& x, const Tensor& dout, const Conv1dParams& p, Conv1dParams& grad,
                     Tensor* dx);

struct BatchNormCache {
  Tensor xhat;
  std::vector<double> mean;
  std::vector<double> var;  // biased batch variance
  std::vector<double> inv_std;
};

// Train mode normalizes by batch statistics and fills cache (required);
// eval mode uses the running statistics.
Tensor batchnorm_forward(const Tensor& x, const BatchNormParams& p, Mode mode, BatchNormCache* cache);
Tensor batchnorm_backward(const Tensor& dy, const BatchNormParams& p, const BatchNormCache& cache,
                          BatchNormParams& grad);
// running <- (1 - momentum) running + momentum batch; variance uses the
// unbiased (n / (n - 1)) estimate.
void update_running_stats(BatchNormParams& p, const BatchNormCache& cache, std::size_t n_per_channel);

Tensor relu_forward(const Tensor& x);
// Gradient passes where the forward output was strictly positive.
Tensor relu_backward(const Tensor& dy, const Tensor& y);

struct PoolOutput {
  Tensor out;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

// Window max; ties go to the lowest index. ShapeError when length < kernel.
PoolOutput maxpool1d_forward(const Tensor& x, std::size_t kernel, std::size_t stride);
Tensor maxpool1d_backward(const Tensor& dout, std::span<const std::size_t> argmax,
                          const std::vector<std::size_t>& input_shape);

// (B x Ca x La), (B x Cb x Lb) -> B x (Ca*La + Cb*Lb): a's rows, then b's.
Tensor flatten_concat(const Tensor& a, const Tensor& b);
void split_concat_grad(const Tensor& d, Tensor& da, Tensor& db);

Tensor linear_forward(const Tensor& x, const LinearParams& p, bool add_bias = true);
void linear_backward(const Tensor& x, const Tensor& dy, const LinearParams& p, LinearParams& grad, Tensor* dx);

// exp(z - max z) / sum, per row.
std::vector<double> softmax(std::span<const double> logits);
Tensor softmax_rows(const Tensor& logits);

}  // namespace ser::nn
