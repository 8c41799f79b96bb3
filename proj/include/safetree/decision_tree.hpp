#pragma once

// Multi-label decision trees.
//
// Inner nodes carry a predicate `x_i <= c` (ordered features) or `x_i == c`
// (categorical features); a configuration satisfying the predicate descends
// to the left child. Every node carries the per-action counts of the
// training configurations reaching it: for action a, y_a configurations
// allow a and n_a = total - y_a do not.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "safetree/strategy.hpp"

namespace safetree {

enum class Relation { less_equal, equal };

struct Predicate {
  std::size_t feature = 0;
  Relation relation = Relation::less_equal;
  double threshold = 0.0;

  bool holds(double value) const {
    return relation == Relation::less_equal ? value <= threshold : value == threshold;
  }
  bool operator==(const Predicate&) const = default;
};

std::string to_string(const Predicate& predicate, const FeatureSchema& schema);

class LeafStats {
 public:
  LeafStats() = default;
  // allowed[a] = y_a; requires allowed[a] <= total for every a.
  LeafStats(std::uint64_t total, std::vector<std::uint64_t> allowed);
  // From the (n_a, y_a) list; every pair must sum to the same total.
  static LeafStats from_pairs(std::span<const std::pair<std::uint64_t, std::uint64_t>> pairs);

  std::uint64_t total() const noexcept { return total_; }
  std::size_t action_count() const noexcept { return allowed_.size(); }
  std::uint64_t allowed(std::size_t action) const { return allowed_[action]; }
  std::uint64_t disallowed(std::size_t action) const { return total_ - allowed_[action]; }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs() const;

  // Every action is allowed by all or by none of the configurations.
  bool unanimous() const;

  LeafStats& operator+=(const LeafStats& other);
  friend LeafStats operator+(LeafStats a, const LeafStats& b) { return a += b; }
  bool operator==(const LeafStats&) const = default;

 private:
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> allowed_;
};

struct TreeNode {
  Predicate predicate;  // inner nodes only
  std::int32_t left = -1;
  std::int32_t right = -1;
  LeafStats stats;

  bool is_leaf() const noexcept { return left < 0; }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  // Node 0 is the root. Nodes are renumbered in preorder, unreachable nodes
  // dropped and inner-node stats recomputed as the sum of their children.
  DecisionTree(FeatureSchema schema, Alphabet alphabet, std::vector<TreeNode> nodes);

  const FeatureSchema& schema() const noexcept { return schema_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  const TreeNode& node(std::size_t id) const { return nodes_.at(id); }

  // Total node count, inner nodes plus leaves.
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  // Index of the leaf reached from the root; predicates evaluate on reals.
  std::size_t leaf_of(std::span<const double> config) const;
  std::size_t leaf_of(std::span<const Value> config) const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j);
  // Compact JSON text; identical trees give identical text.
  std::string canonical() const;

  bool operator==(const DecisionTree& other) const;

 private:
  FeatureSchema schema_;
  Alphabet alphabet_;
  std::vector<TreeNode> nodes_;
};

DecisionTree load_tree(const std::filesystem::path& path);
void save_tree(const DecisionTree& tree, const std::filesystem::path& path);

}  // namespace safetree
