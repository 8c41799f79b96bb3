#include "doctest.h"
#include "oracles.hpp"
#include "safetree/error.hpp"
#include "safetree/learner.hpp"
#include "safetree/pruning.hpp"
#include "safetree/strategy_view.hpp"

using namespace safetree;

namespace {
const std::string fig3_path = std::string(SAFETREE_DATA_DIR) + "/fig3.jsonl";
const ActionSet dec = ActionSet::single(0), dec_neu(0b011), all(0b111);
}  // namespace

TEST_CASE("lookup on fig3") {
  const auto tree = learn(load_strategy(fig3_path));
  CHECK(lookup(tree, std::vector<double>{3, 20}) == dec);
  CHECK(lookup(tree, std::vector<double>{25, 25}) == all);
  CHECK(lookup(tree, std::vector<double>{6.4, 0}) == dec_neu);
  CHECK(lookup(tree, std::vector<double>{6.0, 0}) == dec);
  CHECK(lookup(tree, std::vector<double>{1000, 0}) == dec_neu);
  CHECK(lookup(tree, std::vector<Value>{25, 25}) == all);
}

TEST_CASE("lookup rejects corrupt leaves") {
  TreeNode n;
  n.stats = LeafStats(2, {1, 1});
  const DecisionTree tree(FeatureSchema({Feature::ordered("x", 0, 3)}), Alphabet({"a", "b"}), {n});
  CHECK_THROWS_AS(lookup(tree, std::vector<double>{1}), ValidationError);
}

TEST_CASE("determinization") {
  const auto tree = learn(load_strategy(fig3_path));
  for (auto rule : {DeterminizeRule::lexicographic_first, DeterminizeRule::uniform_seeded}) {
    auto s = determinize(tree, rule, 1);
    CHECK(s(std::vector<double>{3, 20}) == 0);
  }
  auto lex = determinize(tree, DeterminizeRule::lexicographic_first);
  CHECK(lex(std::vector<double>{25, 25}) == 0);

  auto uni = determinize(tree, DeterminizeRule::uniform_seeded, 2024);
  std::size_t decs = 0;
  const std::size_t draws = 100'000;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto a = uni(std::vector<double>{10, 5});
    CHECK(dec_neu.contains(a));
    decs += a == 0;
  }
  CHECK(static_cast<double>(decs) / draws == doctest::Approx(0.5).epsilon(0.02));

  // Same seed, same stream.
  auto u1 = determinize(tree, DeterminizeRule::uniform_seeded, 9);
  auto u2 = determinize(tree, DeterminizeRule::uniform_seeded, 9);
  for (int i = 0; i < 100; ++i) CHECK(u1(std::vector<double>{25, 25}) == u2(std::vector<double>{25, 25}));
}

TEST_CASE("materialization") {
  const auto table = load_strategy(fig3_path);
  const auto tree = learn(table);
  CHECK(to_table(tree, table) == table);

  TreeNode n;
  n.stats = LeafStats(4, {4, 0, 4});
  const DecisionTree constant(FeatureSchema({Feature::ordered("x", 0, 3), Feature::categorical("m", {-1, 1})}),
                              Alphabet({"a", "b", "c"}), {n});
  const auto grid = to_table(constant, constant.schema());
  CHECK(grid.size() == 8);
  for (auto a : grid.all_actions()) CHECK(a == ActionSet(0b101));

  CHECK_THROWS_AS(to_table(constant, constant.schema(), 7), CapacityError);
}

TEST_CASE("materialization agrees with lookup on a 1e4 grid") {
  std::mt19937_64 rng(23);
  const auto train = oracle::random_table(rng, 300, 2, 3, 99);
  const auto tree = safe_prune(learn(train, 2), 1);
  const FeatureSchema grid({Feature::ordered("f0", train.schema()[0].min, train.schema()[0].min + 99),
                            Feature::ordered("f1", train.schema()[1].min, train.schema()[1].min + 99)});
  const auto t = to_table(tree, grid);
  CHECK(t.size() == 10'000);
  for (std::size_t e = 0; e < t.size(); ++e) CHECK(t.actions(e) == lookup(tree, t.configuration(e)));
}
