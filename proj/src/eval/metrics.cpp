#include "ser/eval/metrics.hpp"

#include <limits>
#include <map>

#include "ser/error.hpp"
#include "ser/losses/losses.hpp"

namespace ser::eval {

void Confusion::add(int truth, int predicted) {
  if (truth < 0 || truth >= kNumEmotions || predicted < 0 || predicted >= kNumEmotions) {
    throw RangeError("confusion: class index out of range");
  }
  ++counts[truth][predicted];
}

std::int64_t Confusion::total() const {
  std::int64_t n = 0;
  for (const auto& row : counts) {
    for (auto v : row) n += v;
  }
  return n;
}

std::int64_t Confusion::row_total(int truth) const {
  std::int64_t n = 0;
  for (auto v : counts[truth]) n += v;
  return n;
}

Confusion& Confusion::operator+=(const Confusion& other) {
  for (int i = 0; i < kNumEmotions; ++i) {
    for (int j = 0; j < kNumEmotions; ++j) counts[i][j] += other.counts[i][j];
  }
  return *this;
}

double weighted_accuracy(const Confusion& c) {
  const auto total = c.total();
  if (total == 0) throw ValidationError("weighted_accuracy: empty confusion matrix");
  std::int64_t trace = 0;
  for (int i = 0; i < kNumEmotions; ++i) trace += c.counts[i][i];
  return static_cast<double>(trace) / static_cast<double>(total);
}

std::array<double, kNumEmotions> per_class_recall(const Confusion& c) {
  std::array<double, kNumEmotions> recall{};
  for (int i = 0; i < kNumEmotions; ++i) {
    const auto n = c.row_total(i);
    recall[i] = n ? static_cast<double>(c.counts[i][i]) / static_cast<double>(n) : 0.0;
  }
  return recall;
}

double unweighted_accuracy(const Confusion& c) {
  if (c.total() == 0) throw ValidationError("unweighted_accuracy: empty confusion matrix");
  const auto recall = per_class_recall(c);
  double sum = 0.0;
  int present = 0;
  for (int i = 0; i < kNumEmotions; ++i) {
    if (c.row_total(i) > 0) {
      sum += recall[i];
      ++present;
    }
  }
  return sum / present;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

SeparationDiagnostics separation_diagnostics(const nn::Tensor& embeddings, std::span<const int> classes) {
  const std::size_t n = embeddings.dim(0);
  if (classes.size() != n) throw ShapeError("separation_diagnostics: label count mismatch");
  std::map<int, std::size_t> per_class;
  for (int c : classes) ++per_class[c];
  std::size_t usable = 0;
  for (const auto& [c, count] : per_class) usable += count >= 2;
  if (per_class.size() < 2 || usable < per_class.size()) {
    throw ValidationError("separation_diagnostics: need >= 2 classes with >= 2 samples each");
  }
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = 1.0 - loss::cosine_similarity(embeddings.slice(i), embeddings.slice(j));
      if (classes[i] == classes[j]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  }
  SeparationDiagnostics s;
  s.mean_intra = intra / static_cast<double>(n_intra);
  s.mean_inter = inter / static_cast<double>(n_inter);
  if (s.mean_inter > 0.0) {
    s.separation_ratio = s.mean_intra / s.mean_inter;
  } else {
    // Every embedding points the same way: no separation either side.
    s.separation_ratio = s.mean_intra > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  }
  return s;
}

}  // namespace ser::eval
