#include "ser/train/siamese_gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ser/error.hpp"

namespace ser::train {

namespace {

constexpr int kMaxDraws = 1000;

double preactivation_gap(const nn::Tensor& xhat, const nn::BatchNormParams& bn) {
  const std::size_t batch = xhat.dim(0), ch = xhat.dim(1), len = xhat.dim(2);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t t = 0; t < len; ++t) {
        const double z = bn.gamma[c] * xhat.data[(b * ch + c) * len + t] + bn.beta[c];
        gap = std::min(gap, std::abs(z));
      }
    }
  }
  return gap;
}

// Gap between the two largest values of each pooling window whose maximum is positive.
double pool_gap(const nn::Tensor& relu, std::size_t kernel, std::size_t stride) {
  const std::size_t rows = relu.dim(0) * relu.dim(1), len = relu.dim(2);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = relu.data.data() + r * len;
    for (std::size_t start = 0; start + kernel <= len; start += stride) {
      double top = -1.0, second = -1.0;
      for (std::size_t k = 0; k < kernel; ++k) {
        const double v = x[start + k];
        if (v > top) {
          second = top;
          top = v;
        } else if (v > second) {
          second = v;
        }
      }
      if (top > 0.0) gap = std::min(gap, top - second);
    }
  }
  return gap;
}

double hinge_gap(const nn::Tensor& t1, const nn::Tensor& t2, const std::vector<int>& y,
                 const loss::LossConfig& cfg) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto a = t1.slice(i), b = t2.slice(i);
    if (cfg.type == loss::ContrastiveType::loss_1) {
      if (y[i] == 0) gap = std::min(gap, std::abs(loss::cosine_similarity(a, b) - cfg.margin));
    } else {
      double d2 = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
      const double d = std::sqrt(d2);
      gap = std::min(gap, y[i] == 1 ? d : std::abs(cfg.margin - d));
    }
  }
  return gap;
}

// True when, in some channel, every utterance of every contributing pair has a
// positive maximum in each pooling window: beta then shifts both sides of
// those pairs equally.
bool channel_fully_active(const std::array<const nn::Tensor*, 2>& relu, const std::vector<bool>& contributing,
                          std::size_t kernel, std::size_t stride) {
  const std::size_t ch = relu[0]->dim(1), len = relu[0]->dim(2);
  for (std::size_t c = 0; c < ch; ++c) {
    bool all_positive = true;
    for (const nn::Tensor* t : relu) {
      for (std::size_t b = 0; b < t->dim(0) && all_positive; ++b) {
        if (!contributing[b]) continue;
        const double* x = t->data.data() + (b * ch + c) * len;
        for (std::size_t start = 0; start + kernel <= len && all_positive; start += stride) {
          all_positive = *std::max_element(x + start, x + start + kernel) > 0.0;
        }
      }
    }
    if (all_positive) return true;
  }
  return false;
}

}  // namespace

nn::ModelDims reduced_dims() {
  nn::ModelDims d;
  d.in_ch = 13;
  d.length = 40;
  d.filters_a = 3;
  d.filters_b = 3;
  d.pool_kernel = 4;
  d.pool_stride = 2;
  return d;
}

double kink_distance(const GradCheckProblem& p, const loss::LossConfig& loss_cfg) {
  const auto& m = p.model;
  std::array<nn::ForwardOutput, 2> out = {nn::forward(m, nn::make_batch(p.batch.x1), nn::Mode::train),
                                          nn::forward(m, nn::make_batch(p.batch.x2), nn::Mode::train)};
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& o : out) {
    const auto& c = *o.cache;
    gap = std::min({gap, preactivation_gap(c.bn_a.xhat, m.bn_a), preactivation_gap(c.bn_b.xhat, m.bn_b),
                    pool_gap(c.relu_a, m.dims.pool_kernel, m.dims.pool_stride),
                    pool_gap(c.relu_b, m.dims.pool_kernel, m.dims.pool_stride)});
  }
  if (loss_cfg.lambda > 0.0) {
    const bool at_pos1 = loss_cfg.position == loss::Tap::pos_1;
    const nn::Tensor& t1 = at_pos1 ? out[0].pos1 : out[0].logits;
    const nn::Tensor& t2 = at_pos1 ? out[1].pos1 : out[1].logits;
    gap = std::min(gap, hinge_gap(t1, t2, p.batch.y, loss_cfg));

    // A pure euclidean objective depends only on differences between the sides.
    if (loss_cfg.lambda == 1.0 && loss_cfg.type == loss::ContrastiveType::loss_2) {
      std::vector<bool> contributing(p.batch.size());
      for (std::size_t i = 0; i < contributing.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < t1.dim(1); ++k) {
          const double diff = t1.slice(i)[k] - t2.slice(i)[k];
          d2 += diff * diff;
        }
        contributing[i] = p.batch.y[i] == 1 || std::sqrt(d2) < loss_cfg.margin;
      }
      const std::size_t k = m.dims.pool_kernel, st = m.dims.pool_stride;
      if (channel_fully_active({&out[0].cache->relu_a, &out[1].cache->relu_a}, contributing, k, st) ||
          channel_fully_active({&out[0].cache->relu_b, &out[1].cache->relu_b}, contributing, k, st)) {
        return 0.0;
      }
    }
  }
  return gap;
}

GradCheckProblem make_gradcheck_problem(const nn::ModelDims& base_dims, const loss::LossConfig& loss_cfg,
                                        const loss::MultiTaskConfig& mt_cfg, std::uint64_t seed,
                                        std::size_t n_pairs, double min_kink_distance) {
  if (n_pairs < 2) throw RangeError("gradient check needs at least two pairs");
  nn::ModelDims dims = base_dims;
  dims.aux_classes = loss::aux_classes(mt_cfg.task);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(dims.n_classes) - 1);

  for (int draw = 1; draw <= kMaxDraws; ++draw) {
    GradCheckProblem p;
    p.draws = draw;
    p.model = nn::init_params(dims, rng());
    for (auto* bn : {&p.model.bn_a, &p.model.bn_b}) {
      for (auto& g : bn->gamma) g = 1.0 + 0.5 * unit(rng);
      for (auto& b : bn->beta) b = 0.5 * unit(rng);
    }
    for (auto* conv : {&p.model.conv_a, &p.model.conv_b}) {
      for (auto& b : conv->bias) b = 0.1 * unit(rng);
    }
    for (auto& b : p.model.fc.bias) b = 0.1 * unit(rng);

    p.inputs.resize(2 * n_pairs);
    for (auto& fm : p.inputs) {
      fm.frames = dims.length;
      fm.dims = dims.in_ch;
      fm.valid_frames = dims.length;
      fm.data.resize(fm.frames * fm.dims);
      for (auto& v : fm.data) v = normal(rng);
    }
    for (std::size_t i = 0; i < n_pairs; ++i) {
      const int c1 = cls(rng);
      int c2 = c1;
      if (i % 2 == 1) {
        while (c2 == c1) c2 = cls(rng);
      }
      p.batch.x1.push_back(&p.inputs[2 * i]);
      p.batch.x2.push_back(&p.inputs[2 * i + 1]);
      p.batch.class1.push_back(c1);
      p.batch.class2.push_back(c2);
      if (dims.aux_classes > 0) {
        std::uniform_int_distribution<int> aux(0, static_cast<int>(dims.aux_classes) - 1);
        p.batch.aux1.push_back(aux(rng));
        p.batch.aux2.push_back(aux(rng));
      }
    }
    label_pairs(p.batch);
    if (kink_distance(p, loss_cfg) > min_kink_distance) return p;
  }
  throw Error("no kink-free gradient check point found");
}

nn::GradCheckResult check_problem(const GradCheckProblem& p, const loss::LossConfig& loss_cfg,
                                  const loss::MultiTaskConfig& mt_cfg, double h) {
  const StepResult step = siamese_step(p.batch, p.model, loss_cfg, mt_cfg);
  const std::vector<double> analytic = nn::flatten_trainable(step.grads);
  const std::vector<double> x = nn::flatten_trainable(p.model);
  nn::ModelParams probe = p.model;
  const nn::ScalarFunction f = [&](std::span<const double> w) {
    nn::unflatten_trainable(probe, w);
    return siamese_loss(p.batch, probe, loss_cfg, mt_cfg);
  };
  return nn::finite_diff_check(f, x, analytic, h);
}

}  // namespace ser::train
