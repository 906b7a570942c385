#include "ser/train/samplers.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "ser/error.hpp"

namespace ser::train {

namespace {

std::mt19937_64 epoch_rng(std::uint64_t seed, std::uint64_t epoch, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32), stream};
  return std::mt19937_64(seq);
}

}  // namespace

std::string_view to_string(Sampler s) { return s == Sampler::loader_1 ? "loader_1" : "loader_2"; }

Sampler parse_sampler(std::string_view s) {
  if (s == "loader_1") return Sampler::loader_1;
  if (s == "loader_2") return Sampler::loader_2;
  throw ParseError("unknown sampler '" + std::string(s) + "'");
}

std::vector<IndexPair> loader_1(std::size_t n_items, std::uint64_t seed, std::uint64_t epoch) {
  if (n_items < 2) throw ValidationError("loader_1 needs at least 2 training items");
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = epoch_rng(seed, epoch, 1);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<IndexPair> pairs;
  pairs.reserve(n_items / 2);
  for (std::size_t i = 0; i + 1 < n_items; i += 2) pairs.push_back({order[i], order[i + 1]});
  return pairs;
}

BalancedPairs loader_2(std::span<const int> labels, int n_classes, std::uint64_t seed, std::uint64_t epoch,
                       std::size_t n_pairs) {
  if (n_classes < 2) throw ValidationError("loader_2 needs at least 2 classes");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw RangeError("loader_2: label out of range");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::size_t minority = labels.size();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) throw ValidationError("loader_2: class " + std::to_string(c) + " has no samples");
    minority = std::min(minority, by_class[c].size());
  }
  if (minority < 2) throw ValidationError("loader_2: positive pairs need at least 2 samples per class");

  auto rng = epoch_rng(seed, epoch, 2);
  BalancedPairs out;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    members.resize(minority);
    out.pool.insert(out.pool.end(), members.begin(), members.end());
  }
  if (n_pairs == 0) n_pairs = out.pool.size();
  if (n_pairs % 2 != 0) throw ValidationError("loader_2: n_pairs must be even");

  std::uniform_int_distribution<int> pick_class(0, n_classes - 1);
  std::uniform_int_distribution<int> pick_other(0, n_classes - 2);
  std::uniform_int_distribution<std::size_t> pick_member(0, minority - 1);
  std::uniform_int_distribution<std::size_t> pick_second(0, minority - 2);
  out.pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs / 2; ++i) {
    const auto& members = by_class[static_cast<std::size_t>(pick_class(rng))];
    const std::size_t a = pick_member(rng);
    std::size_t b = pick_second(rng);
    if (b >= a) ++b;
    out.pairs.push_back({members[a], members[b]});
  }
  for (std::size_t i = 0; i < n_pairs / 2; ++i) {
    const int c1 = pick_class(rng);
    int c2 = pick_other(rng);
    if (c2 >= c1) ++c2;
    out.pairs.push_back({by_class[static_cast<std::size_t>(c1)][pick_member(rng)],
                         by_class[static_cast<std::size_t>(c2)][pick_member(rng)]});
  }
  std::shuffle(out.pairs.begin(), out.pairs.end(), rng);
  return out;
}

}  // namespace ser::train
