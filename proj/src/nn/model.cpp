#include "ser/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ser/error.hpp"

namespace ser::nn {

namespace {

std::size_t pooled(std::size_t len, std::size_t kernel, std::size_t stride) {
  if (len < kernel) {
    throw ShapeError("max pool kernel " + std::to_string(kernel) + " exceeds conv output length " +
                     std::to_string(len));
  }
  return (len - kernel) / stride + 1;
}

std::size_t conv_len(std::size_t len, std::size_t kernel, std::size_t pad) {
  if (len + 2 * pad < kernel) throw ShapeError("conv kernel exceeds padded input length");
  return len + 2 * pad - kernel + 1;
}

}  // namespace

std::size_t ModelDims::conv_length_a() const { return conv_len(length, kernel_a, padding_a); }
std::size_t ModelDims::conv_length_b() const { return conv_len(length, kernel_b, padding_b); }
std::size_t ModelDims::pooled_length_a() const { return pooled(conv_length_a(), pool_kernel, pool_stride); }
std::size_t ModelDims::pooled_length_b() const { return pooled(conv_length_b(), pool_kernel, pool_stride); }
std::size_t ModelDims::pos1_size() const {
  return filters_a * pooled_length_a() + filters_b * pooled_length_b();
}

ModelDims dims_for(const dsp::FeatureConfig& cfg) {
  ModelDims d;
  d.in_ch = static_cast<std::size_t>(cfg.feature_dim());
  d.length = dsp::frame_count(cfg.fixed_samples(), cfg);
  return d;
}

namespace {

void glorot(std::vector<double>& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (auto& v : w) v = dist(rng);
}

}  // namespace

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p;
  p.dims = dims;
  p.conv_a = make_conv1d(dims.filters_a, dims.in_ch, dims.kernel_a, dims.padding_a);
  p.conv_b = make_conv1d(dims.filters_b, dims.in_ch, dims.kernel_b, dims.padding_b);
  p.bn_a = make_batchnorm(dims.filters_a);
  p.bn_b = make_batchnorm(dims.filters_b);
  const std::size_t n_pos1 = dims.pos1_size();
  p.fc = make_linear(dims.n_classes, n_pos1);

  std::mt19937_64 rng(seed);
  glorot(p.conv_a.weight, dims.in_ch * dims.kernel_a, dims.filters_a * dims.kernel_a, rng);
  glorot(p.conv_b.weight, dims.in_ch * dims.kernel_b, dims.filters_b * dims.kernel_b, rng);
  glorot(p.fc.weight, n_pos1, dims.n_classes, rng);
  if (dims.aux_classes > 0) {
    p.aux = make_linear(dims.aux_classes, n_pos1);
    glorot(p.aux->weight, n_pos1, dims.aux_classes, rng);
  }
  return p;
}

Gradients zeros_like(const ModelParams& p) {
  Gradients g = p;
  for (auto arr : trainable_arrays(g)) std::fill(arr.begin(), arr.end(), 0.0);
  return g;
}

std::vector<std::span<double>> trainable_arrays(ModelParams& p) {
  std::vector<std::span<double>> out = {
      p.conv_a.weight, p.conv_a.bias, p.bn_a.gamma, p.bn_a.beta,
      p.conv_b.weight, p.conv_b.bias, p.bn_b.gamma, p.bn_b.beta,
      p.fc.weight,     p.fc.bias,
  };
  if (p.aux) {
    out.emplace_back(p.aux->weight);
    out.emplace_back(p.aux->bias);
  }
  return out;
}

std::vector<std::span<const double>> trainable_arrays(const ModelParams& p) {
  auto mut = trainable_arrays(const_cast<ModelParams&>(p));
  return {mut.begin(), mut.end()};
}

std::size_t trainable_count(const ModelParams& p) {
  std::size_t n = 0;
  for (auto arr : trainable_arrays(p)) n += arr.size();
  return n;
}

std::vector<double> flatten_trainable(const ModelParams& p) {
  std::vector<double> flat;
  flat.reserve(trainable_count(p));
  for (auto arr : trainable_arrays(p)) flat.insert(flat.end(), arr.begin(), arr.end());
  return flat;
}

void unflatten_trainable(ModelParams& p, std::span<const double> flat) {
  if (flat.size() != trainable_count(p)) throw ShapeError("unflatten_trainable: size mismatch");
  std::size_t off = 0;
  for (auto arr : trainable_arrays(p)) {
    std::copy_n(flat.begin() + off, arr.size(), arr.begin());
    off += arr.size();
  }
}

Tensor make_batch(std::span<const dsp::FeatureMatrix* const> features) {
  if (features.empty()) throw ShapeError("make_batch: empty batch");
  const std::size_t s = features.front()->frames, d = features.front()->dims;
  Tensor x({features.size(), d, s});
  for (std::size_t b = 0; b < features.size(); ++b) {
    const auto& fm = *features[b];
    if (fm.frames != s || fm.dims != d) throw ShapeError("make_batch: feature matrices differ in shape");
    auto dst = x.slice(b);
    for (std::size_t t = 0; t < s; ++t) {
      for (std::size_t c = 0; c < d; ++c) dst[c * s + t] = fm.data[t * d + c];
    }
  }
  return x;
}

ForwardOutput forward(const ModelParams& model, const Tensor& x, Mode mode) {
  const auto& dims = model.dims;
  if (x.shape.size() != 3 || x.dim(1) != dims.in_ch) {
    throw ShapeError("forward: input " + x.shape_string() + " does not match model in_ch " +
                     std::to_string(dims.in_ch));
  }
  ForwardOutput out;
  ForwardCache cache;
  const bool train = mode == Mode::train;

  auto branch = [&](const Conv1dParams& conv, const BatchNormParams& bn, Tensor& conv_out, BatchNormCache& bn_cache,
                    Tensor& relu_out, std::vector<std::size_t>& argmax) {
    // A per-channel shift cancels under batch statistics, so in train mode the
    // bias only moves the recorded batch mean.
    conv_out = conv1d_forward(x, conv, !train);
    relu_out = relu_forward(batchnorm_forward(conv_out, bn, mode, train ? &bn_cache : nullptr));
    if (train) {
      for (std::size_t c = 0; c < conv.out_ch; ++c) bn_cache.mean[c] += conv.bias[c];
    }
    auto pool = maxpool1d_forward(relu_out, dims.pool_kernel, dims.pool_stride);
    argmax = std::move(pool.argmax);
    return std::move(pool.out);
  };
  Tensor pooled_a = branch(model.conv_a, model.bn_a, cache.conv_a, cache.bn_a, cache.relu_a, cache.argmax_a);
  Tensor pooled_b = branch(model.conv_b, model.bn_b, cache.conv_b, cache.bn_b, cache.relu_b, cache.argmax_b);

  out.pos1 = flatten_concat(pooled_a, pooled_b);
  out.logits = linear_forward(out.pos1, model.fc);
  out.probs = softmax_rows(out.logits);
  if (model.aux) out.aux_logits = linear_forward(out.pos1, *model.aux);
  check_finite(out.logits, "forward");

  if (train) {
    cache.input = x;
    cache.pos1 = out.pos1;
    out.cache = std::move(cache);
  }
  return out;
}

void apply_running_stats(ModelParams& model, const ForwardCache& cache) {
  const std::size_t batch = cache.conv_a.dim(0);
  update_running_stats(model.bn_a, cache.bn_a, batch * cache.conv_a.dim(2));
  update_running_stats(model.bn_b, cache.bn_b, batch * cache.conv_b.dim(2));
}

Gradients backward(const ModelParams& model, const ForwardCache& cache, const Tensor& d_pos1,
                   const Tensor& d_logits, const Tensor* d_aux_logits) {
  const std::size_t batch = cache.pos1.dim(0);
  expect_shape(d_pos1, {batch, cache.pos1.dim(1)}, "backward d_pos1");
  Gradients g = zeros_like(model);

  Tensor dp1;
  linear_backward(cache.pos1, d_logits, model.fc, g.fc, &dp1);
  for (std::size_t i = 0; i < dp1.size(); ++i) dp1.data[i] += d_pos1.data[i];
  if (d_aux_logits) {
    if (!model.aux) throw Error("backward: auxiliary gradient given but model has no auxiliary head");
    Tensor dp1_aux;
    linear_backward(cache.pos1, *d_aux_logits, *model.aux, *g.aux, &dp1_aux);
    for (std::size_t i = 0; i < dp1.size(); ++i) dp1.data[i] += dp1_aux.data[i];
  }

  const auto& dims = model.dims;
  Tensor dpool_a({batch, dims.filters_a, dims.pooled_length_a()});
  Tensor dpool_b({batch, dims.filters_b, dims.pooled_length_b()});
  split_concat_grad(dp1, dpool_a, dpool_b);

  auto branch = [&](const Tensor& dpool, const std::vector<std::size_t>& argmax, const Tensor& relu_out,
                    const BatchNormParams& bn, const BatchNormCache& bn_cache, BatchNormParams& g_bn,
                    const Conv1dParams& conv, Conv1dParams& g_conv) {
    Tensor d_relu = maxpool1d_backward(dpool, argmax, relu_out.shape);
    Tensor d_bn = relu_backward(d_relu, relu_out);
    Tensor d_conv = batchnorm_backward(d_bn, bn, bn_cache, g_bn);
    conv1d_backward(cache.input, d_conv, conv, g_conv, nullptr);
  };
  branch(dpool_a, cache.argmax_a, cache.relu_a, model.bn_a, cache.bn_a, g.bn_a, model.conv_a, g.conv_a);
  branch(dpool_b, cache.argmax_b, cache.relu_b, model.bn_b, cache.bn_b, g.bn_b, model.conv_b, g.conv_b);
  return g;
}

}  // namespace ser::nn
