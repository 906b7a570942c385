#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ser::train {

enum class Sampler { loader_1, loader_2 };
std::string_view to_string(Sampler s);
Sampler parse_sampler(std::string_view s);

// Indices into the training list.
struct IndexPair {
  std::size_t first = 0;
  std::size_t second = 0;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

// Seeded permutation paired off consecutively: floor(n/2) disjoint pairs,
// one index left out when n is odd. Reshuffled per epoch.
std::vector<IndexPair> loader_1(std::size_t n_items, std::uint64_t seed, std::uint64_t epoch);

struct BalancedPairs {
  std::vector<std::size_t> pool;  // every class downsampled to the minority count
  std::vector<IndexPair> pairs;   // half same-class, half cross-class, shuffled
};

// Class-balanced pair generation. n_pairs == 0 means "pool size". Throws when
// a class is empty, when n_pairs is odd, or when the pool has fewer than two
// members per class.
BalancedPairs loader_2(std::span<const int> labels, int n_classes, std::uint64_t seed, std::uint64_t epoch,
                       std::size_t n_pairs = 0);

}  // namespace ser::train
