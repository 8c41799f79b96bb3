#include "safetree/pruning.hpp"

#include <vector>

#include "safetree/error.hpp"

namespace safetree {

ActionSet pure_actions(const LeafStats& stats) {
  ActionSet out;
  for (std::size_t a = 0; a < stats.action_count(); ++a)
    if (stats.disallowed(a) == 0) out.insert(a);
  return out;
}

DecisionTree safe_prune(const DecisionTree& tree, std::size_t rounds) {
  std::vector<TreeNode> nodes(tree.nodes().begin(), tree.nodes().end());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].is_leaf() && pure_actions(nodes[i].stats).empty())
      throw ValidationError("leaf " + std::to_string(i) + " has no pure action");

  for (std::size_t round = 0; round < rounds; ++round) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (!n.is_leaf() && nodes[n.left].is_leaf() && nodes[n.right].is_leaf()) candidates.push_back(i);
    }
    bool merged = false;
    for (auto i : candidates) {
      auto& n = nodes[i];
      const auto& l = nodes[n.left];
      const auto& r = nodes[n.right];
      if ((pure_actions(l.stats) & pure_actions(r.stats)).empty()) continue;
      n.stats = l.stats + r.stats;
      n.left = n.right = -1;
      merged = true;
    }
    if (!merged) break;
  }
  // Detached children are dropped by the renumbering constructor.
  return DecisionTree(tree.schema(), tree.alphabet(), std::move(nodes));
}

}  // namespace safetree
