#include "doctest.h"
#include "oracles.hpp"
#include "safetree/error.hpp"
#include "safetree/learner.hpp"
#include "safetree/pruning.hpp"
#include "safetree/strategy_view.hpp"

using namespace safetree;

namespace {

const std::string fig3_path = std::string(SAFETREE_DATA_DIR) + "/fig3.jsonl";

LeafStats theta(std::initializer_list<std::pair<std::uint64_t, std::uint64_t>> pairs) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> v(pairs);
  return LeafStats::from_pairs(v);
}

std::vector<std::uint32_t> all_entries(const StrategyTable& t) {
  std::vector<std::uint32_t> out(t.size());
  for (std::uint32_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

TreeNode inner(std::size_t feature, double threshold, int left, int right) {
  TreeNode n;
  n.predicate = {feature, Relation::less_equal, threshold};
  n.left = left;
  n.right = right;
  return n;
}

TreeNode leaf(LeafStats s) {
  TreeNode n;
  n.stats = std::move(s);
  return n;
}

}  // namespace

TEST_CASE("multi-label entropy") {
  CHECK(multilabel_entropy(theta({{0, 7}, {7, 0}, {7, 0}})) == 0.0);
  const double expected = static_cast<double>(oracle::h(4.0L / 7.0L));
  CHECK(multilabel_entropy(theta({{0, 7}, {0, 7}, {3, 4}})) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(multilabel_entropy(theta({{0, 7}, {0, 7}, {3, 4}})) == doctest::Approx(0.98523).epsilon(1e-5));
  CHECK(multilabel_entropy(theta({{1, 0}, {0, 1}, {0, 1}})) == 0.0);
  CHECK(multilabel_entropy(theta({{1, 1}, {1, 1}})) == doctest::Approx(2.0));
  CHECK_THROWS_AS(multilabel_entropy(theta({{0, 0}, {0, 0}})), ValidationError);
}

TEST_CASE("fig3 splits") {
  const auto t = load_strategy(fig3_path);
  const auto root = choose_split(t, all_entries(t));
  REQUIRE(root);
  CHECK(root->predicate == Predicate{0, Relation::less_equal, 6.0});
  CHECK(root->left.size() == 3);

  // Rows with distance 7, 20, 25, 45.
  const std::vector<std::uint32_t> rest{3, 4, 5, 6};
  const auto second = choose_split(t, rest);
  REQUIRE(second);
  CHECK(second->predicate == Predicate{0, Relation::less_equal, 22.5});

  CHECK_THROWS_AS(choose_split(t, std::vector<std::uint32_t>{0, 1}), ValidationError);  // zero entropy
  CHECK_THROWS_AS(choose_split(t, std::vector<std::uint32_t>{5}), ValidationError);
}

TEST_CASE("fig3 tree") {
  const auto t = load_strategy(fig3_path);
  const auto tree = learn(t, 2);
  const DecisionTree expected(t.schema(), t.alphabet(),
                              {inner(0, 6, 1, 2), leaf(theta({{0, 3}, {3, 0}, {3, 0}})), inner(0, 22.5, 3, 4),
                               leaf(theta({{0, 2}, {0, 2}, {2, 0}})), inner(0, 35, 5, 6),
                               leaf(theta({{0, 1}, {0, 1}, {0, 1}})), leaf(theta({{0, 1}, {0, 1}, {1, 0}}))});
  CHECK(tree == expected);
  CHECK(tree.canonical() == expected.canonical());
  CHECK(tree.size() == 7);
  CHECK(tree.leaf_count() == 4);
  CHECK(DecisionTree::from_json(tree.to_json()) == tree);
}

TEST_CASE("constant table gives one leaf") {
  StrategyTable::Builder b(FeatureSchema({Feature::ordered("x", 0, 99), Feature::categorical("m", {0, 1})}),
                           Alphabet({"dec", "neu", "acc"}));
  for (Value x = 0; x < 100; ++x)
    for (Value m = 0; m < 2; ++m) b.add({x, m}, ActionSet::single(0));
  const auto tree = learn(std::move(b).build());
  CHECK(tree.size() == 1);
}

TEST_CASE("exact learning on random tables") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 10; ++round) {
    const auto t = oracle::random_table(rng, 500, 3, 3);
    const auto tree = learn(t, 2);
    for (std::size_t e = 0; e < t.size(); ++e) CHECK(lookup(tree, t.configuration(e)) == t.actions(e));
    std::uint64_t total = 0;
    for (const auto& n : tree.nodes())
      if (n.is_leaf()) {
        total += n.stats.total();
        CHECK(n.stats.unanimous());
      }
    CHECK(total == t.size());
    CHECK(learn(t, 2) == tree);  // deterministic
  }
}

TEST_CASE("categorical splits use equality") {
  StrategyTable::Builder b(FeatureSchema({Feature::categorical("m", {-2, 0, 2})}), Alphabet({"dec", "acc"}));
  b.add({-2}, ActionSet(1)).add({0}, ActionSet(2)).add({2}, ActionSet(1));
  const auto t = std::move(b).build();
  const auto tree = learn(t);
  CHECK(tree.node(0).predicate.relation == Relation::equal);
  CHECK(tree.node(0).predicate.threshold == 0.0);
  for (std::size_t e = 0; e < t.size(); ++e) CHECK(lookup(tree, t.configuration(e)) == t.actions(e));
}

TEST_CASE("minimum split size") {
  std::mt19937_64 rng(5);
  std::size_t checked = 0;
  for (int round = 0; round < 30; ++round) {
    // Supersets of one common action make larger k feasible.
    auto t = oracle::random_table(rng, 400, 3, 3);
    StrategyTable::Builder b(t.schema(), t.alphabet());
    for (std::size_t e = 0; e < t.size(); ++e) b.add(t.configuration(e), t.actions(e) | ActionSet::single(round % 3 == 0 ? 0 : 1));
    t = std::move(b).build();

    std::size_t previous = SIZE_MAX;
    for (std::size_t k : {2, 3, 5, 10, 40, 100, 1000}) {
      DecisionTree tree;
      try {
        tree = learn(t, k);
      } catch (const NoPureActionError&) {
        continue;
      }
      ++checked;
      CHECK(tree.size() <= previous);
      previous = tree.size();
      for (std::size_t e = 0; e < t.size(); ++e) {
        const auto got = lookup(tree, t.configuration(e));
        CHECK_FALSE(got.empty());
        CHECK(got.subset_of(t.actions(e)));
      }
    }
  }
  CHECK(checked > 60);
}

TEST_CASE("oversized k reports the leaf") {
  StrategyTable::Builder b(FeatureSchema({Feature::ordered("x", 0, 1)}), Alphabet({"dec", "acc"}));
  b.add({0}, ActionSet(1)).add({1}, ActionSet(2));
  const auto t = std::move(b).build();
  CHECK(learn(t, 2).size() == 3);
  try {
    learn(t, 3);
    FAIL("expected NoPureActionError");
  } catch (const NoPureActionError& e) {
    CHECK(e.node() == 0);
    CHECK(e.configurations() == 2);
  }
}

TEST_CASE("merging two sibling leaves removes two nodes") {
  const auto t = load_strategy(fig3_path);
  const auto tree = learn(t, 2);
  const auto pruned = safe_prune(tree, 1);
  CHECK(pruned.size() == tree.size() - 2);
}
