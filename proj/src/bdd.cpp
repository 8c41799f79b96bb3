#include "safetree/bdd.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "safetree/error.hpp"

namespace safetree {

namespace {
enum Op { op_and = 0, op_or = 1, op_xor = 2 };
}

Bdd::Bdd(std::size_t variables) : Bdd(variables, [variables] {
  std::vector<std::size_t> order(variables);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}()) {}

Bdd::Bdd(std::size_t variables, std::vector<std::size_t> order)
    : unique_(variables), level_of_var_(variables, variables), var_at_level_(std::move(order)) {
  if (var_at_level_.size() != variables) throw ValidationError("variable order has the wrong length");
  for (std::size_t l = 0; l < variables; ++l) {
    const auto v = var_at_level_[l];
    if (v >= variables || level_of_var_[v] != variables) throw ValidationError("variable order is not a permutation");
    level_of_var_[v] = l;
  }
  nodes_.push_back({kTerminalVar, false_node, false_node, 0});
  nodes_.push_back({kTerminalVar, true_node, true_node, 0});
}

Bdd::Node Bdd::allocate(std::uint32_t var, Node low, Node high) {
  Node id;
  if (!free_.empty()) {
    id = free_.back();
    free_.pop_back();
    nodes_[id] = {var, low, high, 0};
  } else {
    if (nodes_.size() >= std::numeric_limits<Node>::max() - 1) throw CapacityError("BDD node table is full");
    id = static_cast<Node>(nodes_.size());
    nodes_.push_back({var, low, high, 0});
  }
  if (!is_terminal(low)) ++nodes_[low].refs;
  if (!is_terminal(high)) ++nodes_[high].refs;
  unique_[var].emplace(key(low, high), id);
  ++live_;
  return id;
}

void Bdd::release(Node n) {
  std::vector<Node> stack{n};
  while (!stack.empty()) {
    const auto m = stack.back();
    stack.pop_back();
    if (is_terminal(m)) continue;
    auto& nd = nodes_[m];
    if (--nd.refs != 0) continue;
    unique_[nd.var].erase(key(nd.low, nd.high));
    stack.push_back(nd.low);
    stack.push_back(nd.high);
    nd.var = kTerminalVar;
    free_.push_back(m);
    --live_;
  }
}

Bdd::Node Bdd::make(std::size_t var, Node low, Node high) {
  if (var >= variable_count()) throw ValidationError("variable index out of range");
  if (low == high) return low;
  const auto level = level_of_var_[var];
  if (level_of_node(low) <= level || level_of_node(high) <= level)
    throw ValidationError("make: children must lie below the node's variable");
  auto& table = unique_[var];
  if (auto it = table.find(key(low, high)); it != table.end()) return it->second;
  return allocate(static_cast<std::uint32_t>(var), low, high);
}

Bdd::Node Bdd::variable(std::size_t var) { return make(var, false_node, true_node); }

Bdd::Node Bdd::apply(int op, Node f, Node g, std::unordered_map<std::uint64_t, Node>& memo) {
  if (is_terminal(f) && is_terminal(g)) {
    const bool a = f == true_node, b = g == true_node;
    const bool r = op == op_and ? (a && b) : op == op_or ? (a || b) : (a != b);
    return r ? true_node : false_node;
  }
  if (op == op_and) {
    if (f == false_node || g == false_node) return false_node;
    if (f == true_node) return g;
    if (g == true_node || f == g) return f;
  } else if (op == op_or) {
    if (f == true_node || g == true_node) return true_node;
    if (f == false_node) return g;
    if (g == false_node || f == g) return f;
  } else {
    if (f == false_node) return g;
    if (g == false_node) return f;
    if (f == g) return false_node;
  }
  if (f > g) std::swap(f, g);  // all three operations are commutative
  const auto k = key(f, g);
  if (auto it = memo.find(k); it != memo.end()) return it->second;
  const auto lf = level_of_node(f), lg = level_of_node(g);
  const auto level = std::min(lf, lg);
  const auto var = var_at_level_[level];
  const Node f0 = lf == level ? nodes_[f].low : f, f1 = lf == level ? nodes_[f].high : f;
  const Node g0 = lg == level ? nodes_[g].low : g, g1 = lg == level ? nodes_[g].high : g;
  const Node lo = apply(op, f0, g0, memo);
  const Node hi = apply(op, f1, g1, memo);
  const Node r = make(var, lo, hi);
  memo.emplace(k, r);
  return r;
}

Bdd::Node Bdd::negate(Node f) { return exclusive_or(f, true_node); }

Bdd::Node Bdd::conjoin(Node f, Node g) {
  std::unordered_map<std::uint64_t, Node> memo;
  return apply(op_and, f, g, memo);
}

Bdd::Node Bdd::disjoin(Node f, Node g) {
  std::unordered_map<std::uint64_t, Node> memo;
  return apply(op_or, f, g, memo);
}

Bdd::Node Bdd::exclusive_or(Node f, Node g) {
  std::unordered_map<std::uint64_t, Node> memo;
  return apply(op_xor, f, g, memo);
}

bool Bdd::evaluate(Node f, std::span<const bool> assignment) const {
  if (assignment.size() < variable_count()) throw ValidationError("assignment too short");
  while (!is_terminal(f)) f = assignment[nodes_[f].var] ? nodes_[f].high : nodes_[f].low;
  return f == true_node;
}

bool Bdd::evaluate_bits(Node f, std::uint64_t assignment) const {
  while (!is_terminal(f)) f = ((assignment >> nodes_[f].var) & 1u) ? nodes_[f].high : nodes_[f].low;
  return f == true_node;
}

std::size_t Bdd::node_count(Node f) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<Node> stack{f};
  std::size_t count = 0;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (seen[n]) continue;
    seen[n] = 1;
    ++count;
    if (!is_terminal(n)) {
      stack.push_back(nodes_[n].low);
      stack.push_back(nodes_[n].high);
    }
  }
  return count;
}

std::size_t Bdd::internal_node_count(Node f) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<Node> stack{f};
  std::size_t count = 0;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (seen[n]) continue;
    seen[n] = 1;
    if (is_terminal(n)) continue;
    ++count;
    stack.push_back(nodes_[n].low);
    stack.push_back(nodes_[n].high);
  }
  return count;
}

void Bdd::collect_garbage() {
  std::vector<char> reachable(nodes_.size(), 0);
  std::vector<Node> stack{root_};
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (reachable[n]) continue;
    reachable[n] = 1;
    if (!is_terminal(n)) {
      stack.push_back(nodes_[n].low);
      stack.push_back(nodes_[n].high);
    }
  }
  for (auto& table : unique_) table.clear();
  free_.clear();
  live_ = 0;
  for (Node n = 2; n < nodes_.size(); ++n) nodes_[n].refs = 0;
  for (Node n = 2; n < nodes_.size(); ++n) {
    auto& nd = nodes_[n];
    if (!reachable[n]) {
      nd.var = kTerminalVar;
      continue;
    }
    unique_[nd.var].emplace(key(nd.low, nd.high), n);
    if (!is_terminal(nd.low)) ++nodes_[nd.low].refs;
    if (!is_terminal(nd.high)) ++nodes_[nd.high].refs;
    ++live_;
  }
  if (!is_terminal(root_)) ++nodes_[root_].refs;
  // Free slots in descending order so reuse starts from the lowest index.
  for (Node n = static_cast<Node>(nodes_.size()); n-- > 2;)
    if (!reachable[n]) free_.push_back(n);
}

void Bdd::swap_adjacent(std::size_t level) {
  if (level + 1 >= variable_count()) throw ValidationError("swap_adjacent: level out of range");
  collect_garbage();
  swap_levels(level);
}

// Requires exact reference counts (collect_garbage() since the last build).
void Bdd::swap_levels(std::size_t level) {
  const auto x = var_at_level_[level];
  const auto y = var_at_level_[level + 1];

  std::vector<Node> xs;
  xs.reserve(unique_[x].size());
  for (const auto& [k, n] : unique_[x]) xs.push_back(n);
  std::sort(xs.begin(), xs.end());

  std::swap(var_at_level_[level], var_at_level_[level + 1]);
  level_of_var_[x] = level + 1;
  level_of_var_[y] = level;

  auto is_y = [&](Node n) { return !is_terminal(n) && nodes_[n].var == y; };
  for (const auto n : xs) {
    const Node f0 = nodes_[n].low, f1 = nodes_[n].high;
    const bool y0 = is_y(f0), y1 = is_y(f1);
    if (!y0 && !y1) continue;  // independent of y: the node simply moves down one level
    const Node f00 = y0 ? nodes_[f0].low : f0, f01 = y0 ? nodes_[f0].high : f0;
    const Node f10 = y1 ? nodes_[f1].low : f1, f11 = y1 ? nodes_[f1].high : f1;
    unique_[x].erase(key(f0, f1));

    const Node a = make(x, f00, f10);
    if (!is_terminal(a)) ++nodes_[a].refs;
    const Node b = make(x, f01, f11);
    if (!is_terminal(b)) ++nodes_[b].refs;

    nodes_[n].var = static_cast<std::uint32_t>(y);
    nodes_[n].low = a;
    nodes_[n].high = b;
    unique_[y].emplace(key(a, b), n);
    release(f0);
    release(f1);
  }
}

void Bdd::sift() {
  collect_garbage();
  const auto n = variable_count();
  if (n < 2 || is_terminal(root_)) return;

  std::vector<std::size_t> vars(n);
  std::iota(vars.begin(), vars.end(), std::size_t{0});
  std::stable_sort(vars.begin(), vars.end(),
                   [this](std::size_t a, std::size_t b) { return unique_[a].size() > unique_[b].size(); });

  for (const auto v : vars) {
    auto cur = level_of_var_[v];
    auto best = live_;
    auto best_level = cur;
    while (cur + 1 < n) {
      swap_levels(cur++);
      if (live_ < best) best = live_, best_level = cur;
    }
    while (cur > 0) {
      swap_levels(--cur);
      if (live_ < best) best = live_, best_level = cur;
    }
    while (cur < best_level) swap_levels(cur++);
  }
}

void Bdd::reorder(std::span<const std::size_t> order) {
  Bdd target(variable_count(), std::vector<std::size_t>(order.begin(), order.end()));
  std::unordered_map<Node, Node> memo{{false_node, false_node}, {true_node, true_node}};
  // Post-order over the old diagram; ite(v, hi, lo) in the new order.
  std::vector<std::pair<Node, bool>> stack{{root_, false}};
  while (!stack.empty()) {
    auto [m, expanded] = stack.back();
    stack.pop_back();
    if (memo.count(m)) continue;
    if (!expanded) {
      stack.push_back({m, true});
      stack.push_back({nodes_[m].low, false});
      stack.push_back({nodes_[m].high, false});
      continue;
    }
    const auto v = target.variable(nodes_[m].var);
    const auto hi = target.conjoin(v, memo.at(nodes_[m].high));
    const auto lo = target.conjoin(target.negate(v), memo.at(nodes_[m].low));
    memo[m] = target.disjoin(hi, lo);
  }
  target.set_root(memo.at(root_));
  target.collect_garbage();
  *this = std::move(target);
}

bool Bdd::check_invariants() const {
  std::set<std::tuple<std::uint32_t, Node, Node>> seen;
  std::vector<char> visited(nodes_.size(), 0);
  std::vector<Node> stack{root_};
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (is_terminal(n) || visited[n]) continue;
    visited[n] = 1;
    const auto& nd = nodes_[n];
    if (nd.var == kTerminalVar) return false;
    if (nd.low == nd.high) return false;
    const auto level = level_of_var_[nd.var];
    if (level_of_node(nd.low) <= level || level_of_node(nd.high) <= level) return false;
    if (!seen.emplace(nd.var, nd.low, nd.high).second) return false;
    stack.push_back(nd.low);
    stack.push_back(nd.high);
  }
  return true;
}

Bdd sift_reorder(Bdd bdd) {
  bdd.sift();
  return bdd;
}

}  // namespace safetree
