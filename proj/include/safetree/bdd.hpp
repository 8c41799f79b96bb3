#pragma once

// Reduced ordered binary decision diagrams without complement edges.
//
// Nodes live in one table with per-variable unique tables (hash-consing).
// Levels are positions in the variable order; level 0 is the top. A Bdd value
// owns its node table and a single root function, so copies are independent.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace safetree {

class Bdd {
 public:
  using Node = std::uint32_t;
  static constexpr Node false_node = 0;
  static constexpr Node true_node = 1;

  explicit Bdd(std::size_t variables = 0);
  // order[level] = variable; must be a permutation of 0..variables-1.
  Bdd(std::size_t variables, std::vector<std::size_t> order);

  std::size_t variable_count() const noexcept { return level_of_var_.size(); }
  std::size_t level_of(std::size_t var) const { return level_of_var_.at(var); }
  std::size_t var_at(std::size_t level) const { return var_at_level_.at(level); }
  std::span<const std::size_t> order() const noexcept { return var_at_level_; }

  // Reduced node for "var ? high : low"; children must lie strictly below var.
  Node make(std::size_t var, Node low, Node high);
  Node variable(std::size_t var);
  Node negate(Node f);
  Node conjoin(Node f, Node g);
  Node disjoin(Node f, Node g);
  Node exclusive_or(Node f, Node g);

  std::size_t var_of(Node n) const { return nodes_[n].var; }
  Node low(Node n) const { return nodes_[n].low; }
  Node high(Node n) const { return nodes_[n].high; }
  bool is_terminal(Node n) const noexcept { return n <= true_node; }

  Node root() const noexcept { return root_; }
  void set_root(Node root) { root_ = root; }

  // assignment[var] gives the value of each variable.
  bool evaluate(Node f, std::span<const bool> assignment) const;
  // Bit `var` of `assignment` gives the value of each variable (<= 64 variables).
  bool evaluate_bits(Node f, std::uint64_t assignment) const;

  // Nodes reachable from f, terminals included: a constant function has size 1.
  std::size_t node_count(Node f) const;
  // Reachable non-terminal nodes.
  std::size_t internal_node_count(Node f) const;

  // Drops everything unreachable from the root.
  void collect_garbage();
  // Live non-terminal nodes, valid after collect_garbage() and during reordering.
  std::size_t live_nodes() const noexcept { return live_; }

  // Exchanges the variables at `level` and `level + 1`, keeping the root function.
  void swap_adjacent(std::size_t level);
  // Rudell sifting: moves each variable through every level and leaves it
  // where the diagram is smallest. Never increases the size.
  void sift();
  // Rebuilds the diagram in the given order (order[level] = var).
  void reorder(std::span<const std::size_t> order);

  // Structural invariants: ordered, reduced, no duplicates.
  bool check_invariants() const;

 private:
  struct NodeData {
    std::uint32_t var;
    Node low, high;
    std::uint32_t refs;
  };
  static constexpr std::uint32_t kTerminalVar = ~0u;

  std::size_t level_of_node(Node n) const {
    return n <= true_node ? variable_count() : level_of_var_[nodes_[n].var];
  }
  static std::uint64_t key(Node low, Node high) { return (std::uint64_t{low} << 32) | high; }
  Node allocate(std::uint32_t var, Node low, Node high);
  void release(Node n);
  void swap_levels(std::size_t level);
  Node apply(int op, Node f, Node g, std::unordered_map<std::uint64_t, Node>& memo);

  std::vector<NodeData> nodes_;
  std::vector<Node> free_;
  std::vector<std::unordered_map<std::uint64_t, Node>> unique_;  // per variable
  std::vector<std::size_t> level_of_var_;
  std::vector<std::size_t> var_at_level_;
  Node root_ = false_node;
  std::size_t live_ = 0;
};

// Reachable node count, terminals included.
inline std::size_t bdd_size(const Bdd& bdd) { return bdd.node_count(bdd.root()); }

// Sifted copy of `bdd`.
Bdd sift_reorder(Bdd bdd);

}  // namespace safetree
