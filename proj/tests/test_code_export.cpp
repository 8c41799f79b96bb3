#include "doctest.h"
#include "oracles.hpp"
#include "safetree/code_export.hpp"
#include "safetree/error.hpp"
#include "safetree/learner.hpp"
#include "safetree/pruning.hpp"
#include "safetree/strategy_view.hpp"

using namespace safetree;

namespace {
const std::string fig3_path = std::string(SAFETREE_DATA_DIR) + "/fig3.jsonl";

// Frozen output for the fig3 tree.
const char* const fig3_code =
    "/* Decision-tree controller: 7 nodes, 4 leaves.\n"
    " * Returns the first allowed action of each leaf. */\n"
    "enum action { DEC = 0, NEU = 1, ACC = 2 };\n"
    "\n"
    "enum action controller(double distance, double velocity)\n"
    "{\n"
    "  if (distance <= 6) {\n"
    "    return DEC;\n"
    "  } else {\n"
    "    if (2 * distance <= 45) { /* distance <= 22.5 */\n"
    "      return DEC;\n"
    "    } else {\n"
    "      if (distance <= 35) {\n"
    "        return DEC;\n"
    "      } else {\n"
    "        return DEC;\n"
    "      }\n"
    "    }\n"
    "  }\n"
    "}\n";
}  // namespace

TEST_CASE("single leaf") {
  TreeNode n;
  n.stats = LeafStats(3, {3, 0, 1});
  const DecisionTree tree(FeatureSchema({Feature::ordered("x", 0, 3)}), Alphabet({"dec", "neu", "acc"}), {n});
  const auto code = export_code(tree);
  CHECK(code.find("{\n  return DEC;\n}\n") != std::string::npos);
  const auto ctl = ExportedController::parse(code);
  CHECK(ctl.if_count() == 0);
  CHECK(ctl.return_count() == 1);
  CHECK(ctl.evaluate_name(std::vector<double>{2}) == "DEC");
}

TEST_CASE("fig3 export") {
  const auto tree = learn(load_strategy(fig3_path));
  const auto code = export_code(tree);
  CHECK(code == fig3_code);
  const auto ctl = ExportedController::parse(code);
  CHECK(ctl.if_count() == 3);
  CHECK(ctl.return_count() == 4);
  CHECK(ctl.function_name() == "controller");
  CHECK(ctl.parameters().size() == 2);
  CHECK(ctl.evaluate(std::vector<double>{22.5, 0}) == 0);
}

TEST_CASE("custom names") {
  const auto tree = learn(load_strategy(fig3_path));
  CodeExportOptions o;
  o.function_name = "pick";
  o.enum_name = "mode";
  const auto ctl = ExportedController::parse(export_code(tree, o));
  CHECK(ctl.function_name() == "pick");
}

TEST_CASE("emitted code matches lexicographic determinization") {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 20; ++round) {
    const auto t = oracle::random_table(rng, 200 + 40 * round, 1 + round % 4, 2 + round % 3, 30);
    // Supersets of one action so pruning has something to merge.
    StrategyTable::Builder b(t.schema(), t.alphabet());
    for (std::size_t e = 0; e < t.size(); ++e) b.add(t.configuration(e), t.actions(e) | ActionSet::single(0));
    const auto table = std::move(b).build();
    const auto tree = safe_prune(learn(table, 2), round % 3);
    const auto ctl = ExportedController::parse(export_code(tree));
    auto lex = determinize(tree, DeterminizeRule::lexicographic_first);
    for (std::size_t e = 0; e < table.size(); ++e) {
      const auto cfg = table.configuration(e);
      std::vector<double> x(cfg.begin(), cfg.end());
      CHECK(ctl.evaluate(x) == lex(x));
    }
  }
}

TEST_CASE("parser rejects other text") {
  CHECK_THROWS_AS(ExportedController::parse("int main() { return 0; }"), ParseError);
  const std::string head = "enum action { DEC = 0 };\nenum action f(double x)\n{\n";
  CHECK_NOTHROW(ExportedController::parse(head + "  return DEC;\n}\n"));
  CHECK_THROWS_AS(ExportedController::parse(head + "  return FOO;\n}\n"), ParseError);
  CHECK_THROWS_AS(ExportedController::parse(head + "  if (y <= 1) { return DEC; }\n}\n"), ParseError);
  CHECK_THROWS_AS(ExportedController::parse(head + "  return DEC;\n"), ParseError);
  try {
    ExportedController::parse(head + "  while (x) {}\n}\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}
