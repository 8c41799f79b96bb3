#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "safetree/error.hpp"
#include "safetree/strategy.hpp"

using namespace safetree;

namespace {

const std::string fig3_path = std::string(SAFETREE_DATA_DIR) + "/fig3.jsonl";
const std::string header =
    R"({"features":[{"name":"distance","kind":"ordered","min":0,"max":50},{"name":"velocity","kind":"ordered","min":0,"max":80}],"actions":["dec","neu","acc"]})";

StrategyTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_strategy(in);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("safetree_" + name);
}

}  // namespace

TEST_CASE("fig3 table loads") {
  const auto t = load_strategy(fig3_path);
  CHECK(t.size() == 7);
  CHECK(t.schema().arity() == 2);
  CHECK(t.find(std::vector<Value>{25, 25}) == t.alphabet().all());
  CHECK(t.find(std::vector<Value>{2, 51}) == ActionSet::single(0));
  CHECK_FALSE(t.find(std::vector<Value>{2, 52}).has_value());
}

TEST_CASE("empty strategy is rejected") {
  CHECK_THROWS_WITH_AS(parse(header + "\n"), "empty strategy", ValidationError);
}

TEST_CASE("duplicate configuration is rejected") {
  const auto text = header + "\n" + R"({"c":[2,51],"a":["dec"]})" + "\n" + R"({"c":[2,51],"a":["neu"]})" + "\n";
  CHECK_THROWS_WITH_AS(parse(text), doctest::Contains("duplicate configuration (2,51)"), Error);
}

TEST_CASE("malformed input reports the line") {
  const auto text = header + "\n" + R"({"c":[2,51],"a":["dec"]})" + "\n" + R"({"c":[3],"a":["dec"]})" + "\n";
  try {
    parse(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse(header + "\n" + R"({"c":[2,51],"a":[]})" + "\n"), Error);
  CHECK_THROWS_AS(parse(header + "\n" + R"({"c":[2,51],"a":["brake"]})" + "\n"), ParseError);
  CHECK_THROWS_AS(parse(header + "\n" + R"({"c":[2,99],"a":["dec"]})" + "\n"), Error);
  CHECK_THROWS_AS(parse("not json\n"), ParseError);
}

TEST_CASE("round trip") {
  SUBCASE("fig3") {
    const auto t = load_strategy(fig3_path);
    const auto p = temp_file("fig3.jsonl");
    save_strategy(t, p);
    CHECK(load_strategy(p) == t);
  }
  SUBCASE("single entry writes one row") {
    StrategyTable::Builder b(FeatureSchema({Feature::ordered("x", 0, 3)}), Alphabet({"dec", "neu"}));
    b.add({1}, ActionSet(3));
    const auto t = std::move(b).build();
    std::ostringstream out;
    write_strategy(t, out);
    const auto text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(parse(text) == t);
  }
  SUBCASE("1e5 random entries") {
    std::mt19937_64 rng(7);
    const auto t = oracle::random_table(rng, 100'000, 5, 4, 60);
    const auto p = temp_file("random.jsonl");
    save_strategy(t, p);
    const auto back = load_strategy(p);
    REQUIRE(back.size() == t.size());
    CHECK(back == t);
    // Stored order is preserved too.
    for (std::size_t e = 0; e < t.size(); e += 997) {
      CHECK(std::equal(back.configuration(e).begin(), back.configuration(e).end(), t.configuration(e).begin()));
      CHECK(back.actions(e) == t.actions(e));
    }
  }
}

TEST_CASE("sub-strategies") {
  const auto t = load_strategy(fig3_path);
  CHECK(is_sub_strategy(t, t));

  StrategyTable::Builder only_dec(t.schema(), t.alphabet());
  only_dec.add({25, 25}, ActionSet::single(0));
  CHECK(is_sub_strategy(t, std::move(only_dec).build()));

  StrategyTable::Builder acc(t.schema(), t.alphabet());
  acc.add({2, 51}, ActionSet::single(2));
  CHECK_FALSE(is_sub_strategy(t, std::move(acc).build()));

  StrategyTable::Builder missing(t.schema(), t.alphabet());
  missing.add({1, 1}, ActionSet::single(0));
  CHECK_FALSE(is_sub_strategy(t, std::move(missing).build()));

  const StrategyTable other(FeatureSchema({Feature::ordered("x", 0, 3)}), t.alphabet(), {1}, {ActionSet(1)});
  CHECK_THROWS_AS((void)is_sub_strategy(t, other), ValidationError);
}

TEST_CASE("sub-strategy relation is transitive") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 20; ++round) {
    const auto a = oracle::random_table(rng, 200, 3, 4);
    auto shrink = [&](const StrategyTable& t) {
      StrategyTable::Builder b(t.schema(), t.alphabet());
      for (std::size_t e = 0; e < t.size(); ++e) {
        if (rng() % 4 == 0) continue;
        auto set = ActionSet(t.actions(e).bits() & static_cast<std::uint32_t>(rng()));
        if (set.empty()) set = ActionSet::single(t.actions(e).first());
        b.add(t.configuration(e), set);
      }
      return std::move(b).build();
    };
    const auto b = shrink(a);
    const auto c = shrink(b);
    CHECK(is_sub_strategy(a, b));
    CHECK(is_sub_strategy(b, c));
    CHECK(is_sub_strategy(a, c));
  }
}

TEST_CASE("equality ignores entry order") {
  const auto t = load_strategy(fig3_path);
  StrategyTable::Builder b(t.schema(), t.alphabet());
  for (std::size_t e = t.size(); e-- > 0;) b.add(t.configuration(e), t.actions(e));
  CHECK(std::move(b).build() == t);
}

TEST_CASE("schema validation") {
  CHECK_THROWS_AS(FeatureSchema({Feature::ordered("x", 0, 3), Feature::ordered("x", 0, 3)}), ValidationError);
  CHECK_THROWS_AS(FeatureSchema({Feature::ordered("x", 3, 0)}), ValidationError);
  const FeatureSchema s({Feature::ordered("x", -2, 3), Feature::categorical("m", {-2, 0, 2})});
  CHECK(s.conforms(std::vector<Value>{-2, 0}));
  CHECK_FALSE(s.conforms(std::vector<Value>{-2, 1}));
  CHECK_FALSE(s.conforms(std::vector<Value>{4, 0}));
  CHECK(schema_from_json(schema_to_json(s)) == s);
}
