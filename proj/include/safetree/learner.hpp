#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "safetree/decision_tree.hpp"
#include "safetree/strategy.hpp"

namespace safetree {

// Sum over actions of the binary entropy h(y_a / n), in bits. Zero iff every
// action is unanimous. Throws ValidationError on an empty node.
double multilabel_entropy(const LeafStats& stats);

// Counts of the given table entries.
LeafStats stats_of(const StrategyTable& table, std::span<const std::uint32_t> entries);

struct Split {
  Predicate predicate;
  std::vector<std::uint32_t> left;   // entries satisfying the predicate
  std::vector<std::uint32_t> right;
  double score = 0.0;  // |left| * H(left) + |right| * H(right)
};

// Best split of a node holding `entries` (at least two, positive entropy).
// Candidates are midpoints between consecutive distinct values of ordered
// features and equalities with present values of categorical features; the
// chosen one minimises the size-weighted entropy sum of the two sides. Ties
// go to the lowest feature index, then the lowest threshold. Returns nullopt
// when no predicate separates the entries.
std::optional<Split> choose_split(const StrategyTable& table, std::span<const std::uint32_t> entries);

// Grows a tree, splitting a node while its entropy is positive and it holds
// at least `min_split` configurations. min_split = 2 gives an exact
// representation of the table. Throws NoPureActionError naming the first
// leaf that ends up without a pure action.
DecisionTree learn(const StrategyTable& table, std::size_t min_split = 2);

}  // namespace safetree
