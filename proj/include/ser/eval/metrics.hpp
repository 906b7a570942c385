#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "ser/data/corpus.hpp"
#include "ser/nn/tensor.hpp"

namespace ser::eval {

using data::kNumEmotions;

// Rows are true classes, columns predictions.
struct Confusion {
  std::array<std::array<std::int64_t, kNumEmotions>, kNumEmotions> counts{};

  void add(int truth, int predicted);
  std::int64_t total() const;
  std::int64_t row_total(int truth) const;
  Confusion& operator+=(const Confusion& other);
};

// trace / total. Throws on an all-zero matrix.
double weighted_accuracy(const Confusion& c);
// Mean recall over classes that have test samples. Throws on an all-zero matrix.
double unweighted_accuracy(const Confusion& c);
// Recall per class; 0 for classes without test samples.
std::array<double, kNumEmotions> per_class_recall(const Confusion& c);

// Index of the largest value; ties resolve to the lowest index.
int argmax(std::span<const double> values);

struct SeparationDiagnostics {
  double mean_intra = 0.0;
  double mean_inter = 0.0;
  double separation_ratio = 0.0;  // mean_intra / mean_inter
};

// Brute force over all pairs of rows with cosine distance 1 - cos.
// Needs at least two classes with at least two members each.
SeparationDiagnostics separation_diagnostics(const nn::Tensor& embeddings, std::span<const int> classes);

}  // namespace ser::eval
