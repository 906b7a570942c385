#include "ser/losses/losses.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "ser/error.hpp"
#include "ser/simd/kernels.hpp"

namespace ser::loss {

namespace {

std::atomic<std::uint64_t> g_contrastive_evaluations{0};

void fill_zero(std::span<double> d) { std::fill(d.begin(), d.end(), 0.0); }

}  // namespace

std::string_view to_string(ContrastiveType t) { return t == ContrastiveType::loss_1 ? "loss_1" : "loss_2"; }
std::string_view to_string(Tap t) { return t == Tap::pos_1 ? "pos_1" : "pos_2"; }
std::string_view to_string(Reduction r) { return r == Reduction::mean ? "mean" : "sum"; }

ContrastiveType parse_contrastive_type(std::string_view s) {
  if (s == "loss_1") return ContrastiveType::loss_1;
  if (s == "loss_2") return ContrastiveType::loss_2;
  throw ParseError("unknown contrastive loss type '" + std::string(s) + "'");
}

Tap parse_tap(std::string_view s) {
  if (s == "pos_1") return Tap::pos_1;
  if (s == "pos_2") return Tap::pos_2;
  throw ParseError("unknown loss position '" + std::string(s) + "'");
}

Reduction parse_reduction(std::string_view s) {
  if (s == "mean") return Reduction::mean;
  if (s == "sum") return Reduction::sum;
  throw ParseError("unknown reduction '" + std::string(s) + "'");
}

double default_margin(ContrastiveType t) { return t == ContrastiveType::loss_1 ? 0.5 : 1.0; }

void validate(const LossConfig& cfg) {
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw RangeError("lambda must lie in [0, 1]");
  if (!(cfg.margin > 0.0)) throw RangeError("margin must be positive");
  if (cfg.type == ContrastiveType::loss_1 && !(cfg.margin < 1.0)) {
    throw RangeError("cosine loss margin must lie in (0, 1)");
  }
}

std::string_view to_string(AuxTask t) {
  switch (t) {
    case AuxTask::none: return "none";
    case AuxTask::gender: return "gender";
    case AuxTask::valence: return "valence";
    case AuxTask::activation: return "activation";
    case AuxTask::dominance: return "dominance";
  }
  return "?";
}

AuxTask parse_aux_task(std::string_view s) {
  for (AuxTask t : {AuxTask::none, AuxTask::gender, AuxTask::valence, AuxTask::activation, AuxTask::dominance}) {
    if (s == to_string(t)) return t;
  }
  throw ParseError("unknown auxiliary task '" + std::string(s) + "'");
}

std::size_t aux_classes(AuxTask t) {
  switch (t) {
    case AuxTask::none: return 0;
    case AuxTask::gender: return 2;
    default: return 3;
  }
}

void validate(const MultiTaskConfig& cfg) {
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 0.5)) throw RangeError("multi-task lambda must lie in [0, 0.5]");
}

double cosine_similarity(std::span<const double> x1, std::span<const double> x2, std::span<double> d1,
                         std::span<double> d2) {
  if (x1.size() != x2.size()) throw ShapeError("cosine_similarity: length mismatch");
  const auto& k = simd::active_kernels();
  const double n1 = std::sqrt(k.dot(x1.data(), x1.data(), x1.size()));
  const double n2 = std::sqrt(k.dot(x2.data(), x2.data(), x2.size()));
  if (n1 == 0.0 || n2 == 0.0) {
    fill_zero(d1);
    fill_zero(d2);
    return 0.0;
  }
  const double inv = 1.0 / (n1 * n2);
  const double c = k.dot(x1.data(), x2.data(), x1.size()) * inv;
  // dc/dx1 = x2 / (|x1||x2|) - c x1 / |x1|^2
  if (!d1.empty()) {
    for (std::size_t i = 0; i < x1.size(); ++i) d1[i] = x2[i] * inv - c * x1[i] / (n1 * n1);
  }
  if (!d2.empty()) {
    for (std::size_t i = 0; i < x2.size(); ++i) d2[i] = x1[i] * inv - c * x2[i] / (n2 * n2);
  }
  return c;
}

double contrastive_loss_1(std::span<const double> x1, std::span<const double> x2, int y, double margin,
                          std::span<double> d1, std::span<double> d2) {
  const double c = cosine_similarity(x1, x2, d1, d2);
  if (y == 1) {
    for (auto& v : d1) v = -v;
    for (auto& v : d2) v = -v;
    return 1.0 - c;
  }
  if (c - margin > 0.0) return c - margin;
  fill_zero(d1);
  fill_zero(d2);
  return 0.0;
}

double contrastive_loss_2(std::span<const double> x1, std::span<const double> x2, int y, double margin,
                          std::span<double> d1, std::span<double> d2) {
  if (x1.size() != x2.size()) throw ShapeError("contrastive_loss_2: length mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) sq += (x1[i] - x2[i]) * (x1[i] - x2[i]);
  const double dist = std::sqrt(sq);
  double value = 0.0;
  double sign = 0.0;  // d(loss)/d(dist)
  if (y == 1) {
    value = dist;
    sign = 1.0;
  } else if (margin - dist > 0.0) {
    value = margin - dist;
    sign = -1.0;
  }
  if (sign == 0.0 || dist == 0.0) {
    fill_zero(d1);
    fill_zero(d2);
    return value;
  }
  for (std::size_t i = 0; i < x1.size(); ++i) {
    const double g = sign * (x1[i] - x2[i]) / dist;
    if (!d1.empty()) d1[i] = g;
    if (!d2.empty()) d2[i] = -g;
  }
  return value;
}

double pairwise_batch_loss(const nn::Tensor& x1, const nn::Tensor& x2, std::span<const int> y,
                           const LossConfig& cfg, nn::Tensor* d1, nn::Tensor* d2, double scale) {
  if (y.empty()) throw ValidationError("pairwise_batch_loss: empty pair list");
  if (x1.shape != x2.shape || x1.shape.size() != 2 || x1.dim(0) != y.size()) {
    throw ShapeError("pairwise_batch_loss: inputs " + x1.shape_string() + " / " + x2.shape_string() +
                     " do not match " + std::to_string(y.size()) + " labels");
  }
  ++g_contrastive_evaluations;
  if (d1) *d1 = nn::Tensor(x1.shape);
  if (d2) *d2 = nn::Tensor(x2.shape);
  const double norm = cfg.reduction == Reduction::mean ? 1.0 / static_cast<double>(y.size()) : 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::span<double> g1 = d1 ? d1->slice(i) : std::span<double>{};
    std::span<double> g2 = d2 ? d2->slice(i) : std::span<double>{};
    const double v = cfg.type == ContrastiveType::loss_1
                         ? contrastive_loss_1(x1.slice(i), x2.slice(i), y[i], cfg.margin, g1, g2)
                         : contrastive_loss_2(x1.slice(i), x2.slice(i), y[i], cfg.margin, g1, g2);
    total += v;
    for (auto& g : g1) g *= scale * norm;
    for (auto& g : g2) g *= scale * norm;
  }
  return total * norm;
}

std::uint64_t contrastive_evaluations() { return g_contrastive_evaluations.load(); }

double cross_entropy(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("cross_entropy: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != 0.0) acc -= p[i] * std::log(std::max(q[i], kProbFloor));
  }
  return acc;
}

double softmax_cross_entropy(const nn::Tensor& probs, std::span<const int> labels, nn::Tensor* d_logits,
                             double scale) {
  const std::size_t batch = probs.dim(0), n = probs.dim(1);
  if (labels.size() != batch) throw ShapeError("softmax_cross_entropy: label count mismatch");
  if (d_logits) *d_logits = nn::Tensor(probs.shape);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto label = static_cast<std::size_t>(labels[b]);
    if (label >= n) throw RangeError("softmax_cross_entropy: label out of range");
    total -= std::log(std::max(probs.data[b * n + label], kProbFloor));
    if (d_logits) {
      for (std::size_t c = 0; c < n; ++c) {
        const double target = c == label ? 1.0 : 0.0;
        d_logits->data[b * n + c] = scale * (probs.data[b * n + c] - target) / static_cast<double>(batch);
      }
    }
  }
  return total / static_cast<double>(batch);
}

double combined_loss(double contrastive, double cross_entropy, double lambda) {
  return lambda * contrastive + (1.0 - lambda) * cross_entropy;
}

double multitask_loss(double baseline, double addition, double lambda) {
  return (1.0 - lambda) * baseline + lambda * addition;
}

}  // namespace ser::loss
