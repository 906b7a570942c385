#include "ser/data/folds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "ser/error.hpp"

namespace ser::data {

std::vector<FoldSplit> make_session_folds(const Corpus& corpus, double validation_fraction,
                                          std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    throw RangeError("validation_fraction must lie in (0, 0.5)");
  }
  std::array<bool, kNumSessions> present{};
  for (const auto& r : corpus.records) present[r.session - 1] = true;
  for (int s = 0; s < kNumSessions; ++s) {
    if (!present[s]) throw ValidationError("session " + std::to_string(s + 1) + " has no records");
  }

  std::vector<FoldSplit> folds;
  for (int k = 1; k <= kNumSessions; ++k) {
    FoldSplit fold;
    fold.fold_index = k;
    std::array<std::vector<std::string>, kNumEmotions> by_class;
    for (const auto& r : corpus.records) {
      if (r.session == k) {
        fold.test_ids.push_back(r.id);
      } else {
        by_class[static_cast<int>(r.emotion)].push_back(r.id);
      }
    }
    std::sort(fold.test_ids.begin(), fold.test_ids.end());

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    for (auto& ids : by_class) {
      std::sort(ids.begin(), ids.end());
      std::shuffle(ids.begin(), ids.end(), rng);
      const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * ids.size() + 0.5));
      fold.validation_ids.insert(fold.validation_ids.end(), ids.begin(), ids.begin() + n_val);
      fold.train_ids.insert(fold.train_ids.end(), ids.begin() + n_val, ids.end());
    }
    std::sort(fold.train_ids.begin(), fold.train_ids.end());
    std::sort(fold.validation_ids.begin(), fold.validation_ids.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

}  // namespace ser::data
