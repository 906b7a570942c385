#include "ser/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ser/error.hpp"
#include "ser/simd/kernels.hpp"

namespace ser::nn {

std::size_t Conv1dParams::output_length(std::size_t length) const {
  if (length + 2 * padding < kernel) {
    throw ShapeError("conv1d: input length " + std::to_string(length) + " too short for kernel " +
                     std::to_string(kernel));
  }
  return (length + 2 * padding - kernel) / stride + 1;
}

Conv1dParams make_conv1d(std::size_t out_ch, std::size_t in_ch, std::size_t kernel, std::size_t padding,
                         std::size_t stride) {
  if (stride < 1 || kernel < 1) throw ShapeError("conv1d: kernel and stride must be >= 1");
  Conv1dParams p;
  p.out_ch = out_ch;
  p.in_ch = in_ch;
  p.kernel = kernel;
  p.padding = padding;
  p.stride = stride;
  p.weight.assign(out_ch * in_ch * kernel, 0.0);
  p.bias.assign(out_ch, 0.0);
  return p;
}

BatchNormParams make_batchnorm(std::size_t channels) {
  BatchNormParams p;
  p.gamma.assign(channels, 1.0);
  p.beta.assign(channels, 0.0);
  p.running_mean.assign(channels, 0.0);
  p.running_var.assign(channels, 1.0);
  return p;
}

LinearParams make_linear(std::size_t n_out, std::size_t n_in) {
  LinearParams p;
  p.n_out = n_out;
  p.n_in = n_in;
  p.weight.assign(n_out * n_in, 0.0);
  p.bias.assign(n_out, 0.0);
  return p;
}

namespace {

// One sample's input, zero-padded on both sides: in_ch x (L + 2 pad).
void pad_sample(std::span<const double> x, std::size_t in_ch, std::size_t length, std::size_t pad,
                std::vector<double>& out) {
  const std::size_t padded = length + 2 * pad;
  out.assign(in_ch * padded, 0.0);
  for (std::size_t i = 0; i < in_ch; ++i) {
    std::copy_n(x.begin() + i * length, length, out.begin() + i * padded + pad);
  }
}

}  // namespace

Tensor conv1d_forward(const Tensor& x, const Conv1dParams& p, bool add_bias) {
  if (x.shape.size() != 3) throw ShapeError("conv1d: expected (batch x channels x length), got " + x.shape_string());
  if (x.dim(1) != p.in_ch) {
    throw ShapeError("conv1d: input has " + std::to_string(x.dim(1)) + " channels, layer expects " +
                     std::to_string(p.in_ch));
  }
  const std::size_t batch = x.dim(0), length = x.dim(2);
  const std::size_t out_len = p.output_length(length);
  const std::size_t padded = length + 2 * p.padding;
  const auto& k = simd::active_kernels();

  Tensor out({batch, p.out_ch, out_len});
  std::vector<double> xp;
  for (std::size_t b = 0; b < batch; ++b) {
    pad_sample(x.slice(b), p.in_ch, length, p.padding, xp);
    for (std::size_t o = 0; o < p.out_ch; ++o) {
      double* row = out.data.data() + (b * p.out_ch + o) * out_len;
      std::fill_n(row, out_len, add_bias ? p.bias[o] : 0.0);
      for (std::size_t i = 0; i < p.in_ch; ++i) {
        const double* w = p.weight.data() + (o * p.in_ch + i) * p.kernel;
        const double* src = xp.data() + i * padded;
        if (p.stride == 1) {
          for (std::size_t j = 0; j < p.kernel; ++j) k.axpy(w[j], src + j, row, out_len);
        } else {
          for (std::size_t t = 0; t < out_len; ++t) row[t] += k.dot(w, src + t * p.stride, p.kernel);
        }
      }
    }
  }
  return out;
}

void conv1d_backward(const Tensor& x, const Tensor& dout, const Conv1dParams& p, Conv1dParams& grad,
                     Tensor* dx) {
  const std::size_t batch = x.dim(0), length = x.dim(2);
  const std::size_t out_len = p.output_length(length);
  expect_shape(dout, {batch, p.out_ch, out_len}, "conv1d backward");
  const std::size_t padded = length + 2 * p.padding;
  const auto& k = simd::active_kernels();
  if (dx) *dx = Tensor({batch, p.in_ch, length});

  std::vector<double> xp;
  std::vector<double> dxp;
  for (std::size_t b = 0; b < batch; ++b) {
    pad_sample(x.slice(b), p.in_ch, length, p.padding, xp);
    if (dx) dxp.assign(p.in_ch * padded, 0.0);
    for (std::size_t o = 0; o < p.out_ch; ++o) {
      const double* g = dout.data.data() + (b * p.out_ch + o) * out_len;
      double gsum = 0.0;
      for (std::size_t t = 0; t < out_len; ++t) gsum += g[t];
      grad.bias[o] += gsum;
      for (std::size_t i = 0; i < p.in_ch; ++i) {
        const double* w = p.weight.data() + (o * p.in_ch + i) * p.kernel;
        double* gw = grad.weight.data() + (o * p.in_ch + i) * p.kernel;
        const double* src = xp.data() + i * padded;
        if (p.stride == 1) {
          for (std::size_t j = 0; j < p.kernel; ++j) gw[j] += k.dot(g, src + j, out_len);
          if (dx) {
            double* dsrc = dxp.data() + i * padded;
            for (std::size_t j = 0; j < p.kernel; ++j) k.axpy(w[j], g, dsrc + j, out_len);
          }
        } else {
          for (std::size_t t = 0; t < out_len; ++t) {
            k.axpy(g[t], src + t * p.stride, gw, p.kernel);
            if (dx) k.axpy(g[t], w, dxp.data() + i * padded + t * p.stride, p.kernel);
          }
        }
      }
    }
    if (dx) {
      auto dst = dx->slice(b);
      for (std::size_t i = 0; i < p.in_ch; ++i) {
        std::copy_n(dxp.begin() + i * padded + p.padding, length, dst.begin() + i * length);
      }
    }
  }
}

Tensor batchnorm_forward(const Tensor& x, const BatchNormParams& p, Mode mode, BatchNormCache* cache) {
  if (x.shape.size() != 3 || x.dim(1) != p.channels()) {
    throw ShapeError("batchnorm: input " + x.shape_string() + " does not match " + std::to_string(p.channels()) +
                     " channels");
  }
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  Tensor y(x.shape);
  if (mode == Mode::eval) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double scale = p.gamma[c] / std::sqrt(p.running_var[c] + p.eps);
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * ch + c) * len;
        for (std::size_t t = 0; t < len; ++t) y.data[off + t] = (x.data[off + t] - p.running_mean[c]) * scale + p.beta[c];
      }
    }
    return y;
  }

  if (!cache) throw Error("batchnorm: train mode needs a cache");
  const std::size_t n = batch * len;
  if (n < 2) throw ShapeError("batchnorm: train mode needs at least 2 values per channel");
  cache->xhat = Tensor(x.shape);
  cache->mean.assign(ch, 0.0);
  cache->var.assign(ch, 0.0);
  cache->inv_std.assign(ch, 0.0);
  for (std::size_t c = 0; c < ch; ++c) {
    double sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double* row = x.data.data() + (b * ch + c) * len;
      for (std::size_t t = 0; t < len; ++t) sum += row[t];
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const double* row = x.data.data() + (b * ch + c) * len;
      for (std::size_t t = 0; t < len; ++t) sq += (row[t] - mean) * (row[t] - mean);
    }
    const double var = sq / static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + p.eps);
    cache->mean[c] = mean;
    cache->var[c] = var;
    cache->inv_std[c] = inv_std;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        const double xh = (x.data[off + t] - mean) * inv_std;
        cache->xhat.data[off + t] = xh;
        y.data[off + t] = p.gamma[c] * xh + p.beta[c];
      }
    }
  }
  return y;
}

Tensor batchnorm_backward(const Tensor& dy, const BatchNormParams& p, const BatchNormCache& cache,
                          BatchNormParams& grad) {
  const std::size_t batch = dy.dim(0), ch = dy.dim(1), len = dy.dim(2);
  const double n = static_cast<double>(batch * len);
  Tensor dx(dy.shape);
  for (std::size_t c = 0; c < ch; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        sum_dy += dy.data[off + t];
        sum_dy_xhat += dy.data[off + t] * cache.xhat.data[off + t];
      }
    }
    grad.gamma[c] += sum_dy_xhat;
    grad.beta[c] += sum_dy;
    // dxhat = gamma * dy; dx = inv_std / n * (n dxhat - sum dxhat - xhat sum(dxhat xhat))
    const double k = p.gamma[c] * cache.inv_std[c] / n;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        dx.data[off + t] = k * (n * dy.data[off + t] - sum_dy - cache.xhat.data[off + t] * sum_dy_xhat);
      }
    }
  }
  return dx;
}

void update_running_stats(BatchNormParams& p, const BatchNormCache& cache, std::size_t n_per_channel) {
  const double unbias = n_per_channel > 1 ? static_cast<double>(n_per_channel) / (n_per_channel - 1) : 1.0;
  for (std::size_t c = 0; c < p.channels(); ++c) {
    p.running_mean[c] = (1.0 - p.momentum) * p.running_mean[c] + p.momentum * cache.mean[c];
    p.running_var[c] = (1.0 - p.momentum) * p.running_var[c] + p.momentum * cache.var[c] * unbias;
  }
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& dy, const Tensor& y) {
  Tensor dx(dy.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = y.data[i] > 0.0 ? dy.data[i] : 0.0;
  return dx;
}

PoolOutput maxpool1d_forward(const Tensor& x, std::size_t kernel, std::size_t stride) {
  if (x.shape.size() != 3) throw ShapeError("maxpool1d: expected 3-d input");
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  if (kernel < 1 || stride < 1) throw ShapeError("maxpool1d: kernel and stride must be >= 1");
  if (len < kernel) {
    throw ShapeError("maxpool1d: length " + std::to_string(len) + " shorter than kernel " + std::to_string(kernel));
  }
  const std::size_t out_len = (len - kernel) / stride + 1;
  PoolOutput r{Tensor({batch, ch, out_len}), std::vector<std::size_t>(batch * ch * out_len)};
  for (std::size_t row = 0; row < batch * ch; ++row) {
    const std::size_t in_off = row * len;
    for (std::size_t t = 0; t < out_len; ++t) {
      std::size_t best = in_off + t * stride;
      for (std::size_t j = 1; j < kernel; ++j) {
        const std::size_t idx = in_off + t * stride + j;
        if (x.data[idx] > x.data[best]) best = idx;
      }
      r.out.data[row * out_len + t] = x.data[best];
      r.argmax[row * out_len + t] = best;
    }
  }
  return r;
}

Tensor maxpool1d_backward(const Tensor& dout, std::span<const std::size_t> argmax,
                          const std::vector<std::size_t>& input_shape) {
  Tensor dx(input_shape);
  for (std::size_t i = 0; i < dout.size(); ++i) dx.data[argmax[i]] += dout.data[i];
  return dx;
}

Tensor flatten_concat(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 3 || b.shape.size() != 3 || a.dim(0) != b.dim(0)) {
    throw ShapeError("flatten_concat: mismatched branches " + a.shape_string() + " and " + b.shape_string());
  }
  const std::size_t batch = a.dim(0);
  const std::size_t na = a.size() / batch, nb = b.size() / batch;
  Tensor out({batch, na + nb});
  for (std::size_t i = 0; i < batch; ++i) {
    auto dst = out.slice(i);
    std::copy_n(a.slice(i).begin(), na, dst.begin());
    std::copy_n(b.slice(i).begin(), nb, dst.begin() + na);
  }
  return out;
}

void split_concat_grad(const Tensor& d, Tensor& da, Tensor& db) {
  const std::size_t batch = d.dim(0);
  const std::size_t na = da.size() / batch, nb = db.size() / batch;
  if (d.dim(1) != na + nb) throw ShapeError("split_concat_grad: size mismatch");
  for (std::size_t i = 0; i < batch; ++i) {
    auto src = d.slice(i);
    std::copy_n(src.begin(), na, da.slice(i).begin());
    std::copy_n(src.begin() + na, nb, db.slice(i).begin());
  }
}

Tensor linear_forward(const Tensor& x, const LinearParams& p, bool add_bias) {
  if (x.shape.size() != 2 || x.dim(1) != p.n_in) {
    throw ShapeError("linear: input " + x.shape_string() + " does not match n_in " + std::to_string(p.n_in));
  }
  const auto& k = simd::active_kernels();
  const std::size_t batch = x.dim(0);
  Tensor y({batch, p.n_out});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.data.data() + b * p.n_in;
    for (std::size_t o = 0; o < p.n_out; ++o) {
      y.data[b * p.n_out + o] = (add_bias ? p.bias[o] : 0.0) + k.dot(p.weight.data() + o * p.n_in, xb, p.n_in);
    }
  }
  return y;
}

void linear_backward(const Tensor& x, const Tensor& dy, const LinearParams& p, LinearParams& grad, Tensor* dx) {
  const auto& k = simd::active_kernels();
  const std::size_t batch = x.dim(0);
  expect_shape(dy, {batch, p.n_out}, "linear backward");
  if (dx) *dx = Tensor({batch, p.n_in});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x.data.data() + b * p.n_in;
    for (std::size_t o = 0; o < p.n_out; ++o) {
      const double g = dy.data[b * p.n_out + o];
      if (g == 0.0) continue;
      grad.bias[o] += g;
      k.axpy(g, xb, grad.weight.data() + o * p.n_in, p.n_in);
      if (dx) k.axpy(g, p.weight.data() + o * p.n_in, dx->data.data() + b * p.n_in, p.n_in);
    }
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.shape);
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    auto p = softmax(logits.slice(b));
    std::copy(p.begin(), p.end(), out.slice(b).begin());
  }
  return out;
}

}  // namespace ser::nn
