#pragma once

// Reading a decision tree back as a strategy: the actions a tree allows in a
// configuration are exactly the pure actions of the leaf it reaches.

#include <cstdint>
#include <random>
#include <span>

#include "safetree/decision_tree.hpp"
#include "safetree/strategy.hpp"

namespace safetree {

// Throws ValidationError if the reached leaf has no pure action.
ActionSet lookup(const DecisionTree& tree, std::span<const double> config);
ActionSet lookup(const DecisionTree& tree, std::span<const Value> config);

enum class DeterminizeRule { lexicographic_first, uniform_seeded };

// Picks one action from the permissive set at every query. The uniform rule
// draws independently per query from a seeded stream, so the object is
// stateful and not safe for concurrent use. The tree must outlive it.
class DeterministicStrategy {
 public:
  DeterministicStrategy(const DecisionTree& tree, DeterminizeRule rule, std::uint64_t seed = 0);

  std::size_t operator()(std::span<const double> config);
  std::size_t operator()(std::span<const Value> config);
  std::size_t choose(ActionSet allowed);

  DeterminizeRule rule() const noexcept { return rule_; }

 private:
  const DecisionTree* tree_;
  DeterminizeRule rule_;
  std::mt19937_64 rng_;
};

DeterministicStrategy determinize(const DecisionTree& tree, DeterminizeRule rule, std::uint64_t seed = 0);

// Maps every configuration of the integer grid spanned by `grid` to its
// lookup. Throws CapacityError when the grid exceeds `max_points`.
StrategyTable to_table(const DecisionTree& tree, const FeatureSchema& grid,
                       std::size_t max_points = 10'000'000);

// Maps every configuration in the domain of `domain` to its lookup.
StrategyTable to_table(const DecisionTree& tree, const StrategyTable& domain);

}  // namespace safetree
