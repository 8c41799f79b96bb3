#include "safetree/strategy_view.hpp"

#include "safetree/error.hpp"
#include "safetree/pruning.hpp"
#include "safetree/random.hpp"

namespace safetree {

namespace {

ActionSet checked_pure(const DecisionTree& tree, std::size_t leaf) {
  const auto pure = pure_actions(tree.node(leaf).stats);
  if (pure.empty()) throw ValidationError("leaf " + std::to_string(leaf) + " has no pure action");
  return pure;
}

}  // namespace

ActionSet lookup(const DecisionTree& tree, std::span<const double> config) {
  return checked_pure(tree, tree.leaf_of(config));
}

ActionSet lookup(const DecisionTree& tree, std::span<const Value> config) {
  return checked_pure(tree, tree.leaf_of(config));
}

DeterministicStrategy::DeterministicStrategy(const DecisionTree& tree, DeterminizeRule rule, std::uint64_t seed)
    : tree_(&tree), rule_(rule), rng_(seed) {}

std::size_t DeterministicStrategy::choose(ActionSet allowed) {
  if (allowed.empty()) throw ValidationError("cannot choose from an empty action set");
  if (rule_ == DeterminizeRule::lexicographic_first || allowed.size() == 1) return allowed.first();
  const auto members = allowed.members();
  return members[uniform_below(rng_, members.size())];
}

std::size_t DeterministicStrategy::operator()(std::span<const double> config) {
  return choose(lookup(*tree_, config));
}

std::size_t DeterministicStrategy::operator()(std::span<const Value> config) {
  return choose(lookup(*tree_, config));
}

DeterministicStrategy determinize(const DecisionTree& tree, DeterminizeRule rule, std::uint64_t seed) {
  return DeterministicStrategy(tree, rule, seed);
}

StrategyTable to_table(const DecisionTree& tree, const FeatureSchema& grid, std::size_t max_points) {
  if (grid.arity() != tree.schema().arity()) throw ValidationError("grid arity does not match the tree");
  std::size_t points = 1;
  for (const auto& f : grid.features()) {
    const auto n = f.domain_size();
    if (n != 0 && points > max_points / n) throw CapacityError("grid exceeds " + std::to_string(max_points) + " points");
    points *= n;
  }
  if (points > max_points) throw CapacityError("grid exceeds " + std::to_string(max_points) + " points");

  StrategyTable::Builder builder(tree.schema(), tree.alphabet());
  builder.reserve(points);
  const auto d = grid.arity();
  std::vector<std::size_t> digit(d, 0);
  std::vector<Value> config(d);
  auto value_at = [&](std::size_t f, std::size_t i) {
    const auto& feat = grid[f];
    return feat.kind == FeatureKind::ordered ? feat.min + static_cast<Value>(i) : feat.values[i];
  };
  for (std::size_t p = 0; p < points; ++p) {
    for (std::size_t f = 0; f < d; ++f) config[f] = value_at(f, digit[f]);
    builder.add(config, lookup(tree, std::span<const Value>(config)));
    for (std::size_t f = d; f-- > 0;) {
      if (++digit[f] < grid[f].domain_size()) break;
      digit[f] = 0;
    }
  }
  return std::move(builder).build();
}

StrategyTable to_table(const DecisionTree& tree, const StrategyTable& domain) {
  if (domain.schema().arity() != tree.schema().arity()) throw ValidationError("domain arity does not match the tree");
  StrategyTable::Builder builder(tree.schema(), tree.alphabet());
  builder.reserve(domain.size());
  for (std::size_t e = 0; e < domain.size(); ++e) builder.add(domain.configuration(e), lookup(tree, domain.configuration(e)));
  return std::move(builder).build();
}

}  // namespace safetree
