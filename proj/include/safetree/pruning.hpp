#pragma once

#include <cstddef>

#include "safetree/decision_tree.hpp"

namespace safetree {

// Actions allowed by every configuration of the node: {a | n_a = 0}.
ActionSet pure_actions(const LeafStats& stats);

// Safe pruning. Each round collects the inner nodes whose children are both
// leaves and turns every such node into a leaf when the children's pure-action
// sets intersect; the merged counts are the component-wise sums, so the new
// pure set is exactly the intersection. Nodes that only become candidates
// during a round wait for the next one. Stops early at a fixpoint.
// Throws ValidationError if some leaf has no pure action.
DecisionTree safe_prune(const DecisionTree& tree, std::size_t rounds);

}  // namespace safetree
