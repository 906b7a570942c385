#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ser/data/corpus.hpp"

namespace ser::data {

inline constexpr int kNumSessions = 5;

struct FoldSplit {
  int fold_index = 1;
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<std::string> test_ids;
};

// Fold k tests on session k. The other four sessions are split into train and
// validation by drawing round(validation_fraction * n_c) records of each
// class c at random. Deterministic given seed.
std::vector<FoldSplit> make_session_folds(const Corpus& corpus, double validation_fraction,
                                          std::uint64_t seed);

}  // namespace ser::data
