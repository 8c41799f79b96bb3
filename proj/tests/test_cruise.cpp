#include <cmath>
#include <map>

#include "doctest.h"
#include "oracles.hpp"
#include "safetree/cruise.hpp"
#include "safetree/cruise_synthesis.hpp"
#include "safetree/error.hpp"

using namespace safetree;

namespace {

const std::string data_dir = SAFETREE_DATA_DIR;

CruiseState st(double ve, double vf, double d, std::size_t ego, std::size_t front) { return {ve, vf, d, ego, front}; }

constexpr std::size_t dec = 0, neu = 1, acc = 2;

}  // namespace

TEST_CASE("flow") {
  const CruiseModel m;
  auto s = flow(m, st(10, 10, 50, acc, neu), 1);
  CHECK(s.ego_velocity == 12);
  CHECK(s.front_velocity == 10);
  CHECK(s.distance == 49);

  CHECK(flow(m, st(7, 7, 33, neu, neu), 1).distance == 33);
  CHECK(flow(m, st(20, 0, 100, acc, neu), 1).ego_velocity == 20);
  CHECK(flow(m, st(-10, 0, 100, neu, dec), 1).front_velocity == -2);

  // Saturation halfway through the period.
  s = flow(m, st(19, 0, 100, acc, neu), 1);
  CHECK(s.ego_velocity == 20);
  CHECK(s.distance == doctest::Approx(100 - 19.75));
  CHECK_THROWS_AS(flow(m, s, 1.5), ValidationError);
}

TEST_CASE("flow additivity") {
  CruiseModel m;
  m.period = 3;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const auto s = st(static_cast<double>(rng() % 31) - 10, static_cast<double>(rng() % 31) - 10, 50, rng() % 3, rng() % 3);
    const double t1 = 3.0 * safetree::uniform_unit(rng);
    const double t2 = (3.0 - t1) * safetree::uniform_unit(rng);
    const auto a = flow(m, flow(m, s, t1), t2);
    const auto b = flow(m, s, t1 + t2);
    CHECK(a.ego_velocity == doctest::Approx(b.ego_velocity).epsilon(1e-12));
    CHECK(a.front_velocity == doctest::Approx(b.front_velocity).epsilon(1e-12));
    CHECK(a.distance == doctest::Approx(b.distance).epsilon(1e-12));
  }
}

TEST_CASE("minimum gap over a period") {
  const CruiseModel m;
  CHECK(min_gap_over_period(m, st(10, 10, 6, acc, dec)) == 4);
  CHECK(min_gap_over_period(m, st(12, 3, 100, neu, neu)) == flow(m, st(12, 3, 100, neu, neu), 1).distance);
  CHECK(min_gap_over_period(m, st(4, 4, 17, dec, dec)) == 17);

  // Interior minimum: closing at 1 m/s while Ego brakes at 2 m/s^2.
  CHECK(min_gap_over_period(m, st(1, 0, 10, dec, neu)) == 9.75);

  CruiseModel slow = m;
  slow.period = 4;
  // d(t) = 20 - 4t + t^2, lowest at t = 2; Front saturates at t = 9, after the period.
  CHECK(min_gap_over_period(slow, st(6, 2, 20, neu, acc)) == 16);
}

TEST_CASE("bounding contract on random states") {
  CruiseModel m;
  m.period = 2;
  std::mt19937_64 rng(12);
  for (int i = 0; i < 10'000; ++i) {
    const auto s = st(static_cast<double>(rng() % 31) - 10, static_cast<double>(rng() % 31) - 10,
                      5 + 100 * safetree::uniform_unit(rng), rng() % 3, rng() % 3);
    const double low = min_gap_over_period(m, s);
    double sampled = INFINITY;
    for (int k = 0; k <= 64; ++k) {
      const double d = flow(m, s, 2.0 * k / 64).distance;
      CHECK(low <= d + 1e-9);
      sampled = std::min(sampled, d);
    }
    // The bound is attained: dense sampling comes within the curvature error.
    CHECK(sampled - low <= 4 * (2.0 / 64) * (2.0 / 64) + 1e-9);
  }
}

TEST_CASE("opponent support") {
  CruiseModel m;
  CHECK(m.opponent_support(-10) == std::vector<std::size_t>{0, 1, 2});
  m.opponent = OpponentRule::no_saturating_choices;
  CHECK(m.opponent_support(-10) == std::vector<std::size_t>{1, 2});
  CHECK(m.opponent_support(20) == std::vector<std::size_t>{0, 1});
  CHECK(m.opponent_support(5) == std::vector<std::size_t>{0, 1, 2});
  m.opponent = OpponentRule::neutral;
  CHECK(m.opponent_support(5) == std::vector<std::size_t>{1});
  CHECK(parse_opponent_rule("no-saturating-choices") == OpponentRule::no_saturating_choices);
  CHECK_THROWS_AS(parse_opponent_rule("random"), ValidationError);
}

TEST_CASE("cells") {
  const CruiseModel m;
  CHECK(m.cell_of(4.999) == 4);
  CHECK(m.cell_of(200) == 200);
  CHECK(m.cell_of(200.5) == m.far_cell());
  CHECK(m.cell_of(-3) == 0);
  CHECK(m.cell_lower(m.far_cell()) == 200);

  auto r = successor_cells(m, 10, -2.5);  // [7.5, 8.5)
  CHECK(r.first == 7);
  CHECK(r.last == 8);
  CHECK_FALSE(r.far);
  r = successor_cells(m, 10, -3);  // [7, 8)
  CHECK(r.first == 7);
  CHECK(r.last == 7);
  r = successor_cells(m, 199, 0.5);  // [199.5, 200.5)
  CHECK(r.first == 199);
  CHECK(r.last == 200);
  CHECK(r.far);
  r = successor_cells(m, 200, 0.5);
  CHECK(r.first > r.last);
  CHECK(r.far);
  r = successor_cells(m, m.far_cell(), 0);
  CHECK(r.first > r.last);
  CHECK(r.far);
  r = successor_cells(m, m.far_cell(), -30);
  CHECK(r.first == 170);
  CHECK(r.last == 200);
  CHECK(r.far);
}

TEST_CASE("model options") {
  const auto m = load_model(data_dir + "/cruise.json");
  CHECK(m.safe_gap == 5);
  CHECK(m.initial_states.size() == 1);
  CHECK(m.initial_states[0].distance == 100);
  const auto back = CruiseModel::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  CHECK(CruiseModel::from_json(nlohmann::json::object()).to_json() == m.to_json());

  auto bad = m.to_json();
  bad["safe_gap"] = 300;
  CHECK_THROWS_AS(CruiseModel::from_json(bad), ValidationError);
  bad = m.to_json();
  bad["initial_states"][0]["front_mode"] = 1;
  CHECK_THROWS_AS(CruiseModel::from_json(bad), ValidationError);
  bad = m.to_json();
  bad["opponent"] = "chaotic";
  CHECK_THROWS_AS(CruiseModel::from_json(bad), ValidationError);
}

TEST_CASE("safe set on the full grid") {
  const CruiseModel m;
  const auto safe = synthesize_safe(m);
  const auto& space = safe.space();
  auto at = [&](Value ve, Value vf, Value cell, std::size_t u) { return safe.allowed(space.index({ve, vf, cell, u})); };

  CHECK(at(0, 0, 4, neu).empty());
  CHECK(at(20, -10, 5, dec).empty());
  CHECK(at(0, 0, 100, dec) == ActionSet(0b111));
  CHECK(at(0, 0, m.far_cell(), neu) == ActionSet(0b111));
  // Closing at 30 m/s from just beyond the sensor range cannot be stopped in time.
  CHECK(at(20, -10, m.far_cell(), dec).empty());
  // Same velocity, same gap: never both unsafe and braking-free.
  CHECK(at(10, 10, 30, neu).contains(dec));
  CHECK(safe.safe_count() > space.size() / 2);

  const auto table = safe.to_table();
  CHECK(table.size() == safe.safe_count());
  CHECK(SafeSet::from_table(m, table).safe_count() == safe.safe_count());
}

TEST_CASE("infeasible initial state") {
  CruiseModel m;
  m.initial_states = {CruiseState{20, -10, 6, 1, 0}};
  CHECK_THROWS_AS(synthesize_safe(m), InfeasibleError);
}

TEST_CASE("safe set matches a sequential fixpoint over sampled gaps") {
  const auto m = load_model(data_dir + "/mini_cruise.json");
  const auto safe = synthesize_safe(m);
  const auto& space = safe.space();

  // Independent Gauss-Seidel fixpoint through the public flow, visiting states
  // in reverse order.
  std::vector<char> ok(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) ok[i] = m.cell_lower(space.state(i).cell) >= m.safe_gap;
  auto modes = [&](std::size_t i) {
    const auto s = space.state(i);
    ActionSet out;
    for (std::size_t c = 0; c < 3; ++c) {
      const CruiseState x{static_cast<double>(s.ego_velocity), static_cast<double>(s.front_velocity),
                          static_cast<double>(m.cell_lower(s.cell)), c, s.front_mode};
      if (min_gap_over_period(m, x) < m.safe_gap) continue;
      const auto end = flow(m, x, static_cast<double>(m.period));
      const double shift = end.distance - x.distance;
      // Cells reached by gaps in the cell: sample its lower end, interior and
      // (for FAR) far beyond.
      std::vector<Value> cells;
      if (s.cell < m.sensor_range) {
        for (int k = 0; k < 16; ++k) cells.push_back(m.cell_of(s.cell + k / 16.0 + shift));
        cells.push_back(m.cell_of(s.cell + 0.999999 + shift));
      } else if (s.cell == m.sensor_range) {
        cells.push_back(m.cell_of(m.sensor_range + shift));
      } else {
        for (double g = m.sensor_range + 1e-6; g < m.sensor_range + 60; g += 0.25) cells.push_back(m.cell_of(g + shift));
      }
      bool good = true;
      for (const auto u : m.opponent_support(end.front_velocity))
        for (const auto cell : cells)
          good = good && ok[space.index({static_cast<Value>(end.ego_velocity), static_cast<Value>(end.front_velocity), cell, u})];
      if (good) out.insert(c);
    }
    return out;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = space.size(); i-- > 0;) {
      if (!ok[i] || !modes(i).empty()) continue;
      ok[i] = 0;
      changed = true;
    }
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    CHECK(safe.safe(i) == static_cast<bool>(ok[i]));
    if (ok[i]) CHECK(safe.allowed(i) == modes(i));
  }
}

TEST_CASE("value iteration") {
  const auto m = load_model(data_dir + "/toy_cruise.json");
  const auto safe = synthesize_safe(m).to_table();
  REQUIRE(safe.size() > 0);

  const auto h0 = optimize(m, safe, 0);
  for (std::size_t e = 0; e < safe.size(); ++e) {
    CHECK(h0.values[e] == 0);
    CHECK(h0.strategy.actions(e) == ActionSet::single(safe.actions(e).first()));
  }
  const auto h1 = optimize(m, safe, 1);
  for (std::size_t e = 0; e < safe.size(); ++e)
    CHECK(h1.values[e] == static_cast<double>(m.cell_lower(safe.configuration(e)[2])));

  std::vector<double> previous(safe.size(), 0.0);
  for (std::size_t h = 0; h <= 6; ++h) {
    const auto r = optimize(m, safe, h);
    CHECK(is_sub_strategy(safe, r.strategy));
    for (std::size_t e = 0; e < safe.size(); ++e) CHECK(r.values[e] >= previous[e]);
    previous = r.values;
  }

  // Restricting to a domain that is not closed fails loudly.
  StrategyTable::Builder partial(safe.schema(), safe.alphabet());
  partial.add(safe.configuration(0), safe.actions(0));
  CHECK_THROWS_AS(optimize(m, std::move(partial).build(), 2), ValidationError);
}

TEST_CASE("value iteration against the outcome tree") {
  const auto m = load_model(data_dir + "/toy_cruise.json");
  const auto safe = synthesize_safe(m).to_table();
  oracle::OutcomeTree tree{m, {}};
  for (std::size_t e = 0; e < safe.size(); ++e) {
    const auto c = safe.configuration(e);
    tree.allowed[std::vector<Value>(c.begin(), c.end())] = safe.actions(e);
  }
  for (std::size_t h = 1; h <= 3; ++h) {
    const auto r = optimize(m, safe, h);
    for (std::size_t e = 0; e < safe.size(); ++e) {
      const auto c = safe.configuration(e);
      const std::vector<Value> cfg(c.begin(), c.end());
      const auto expect = tree.value(cfg, h);
      CHECK(std::abs(r.values[e] - static_cast<double>(expect)) <= 1e-9 * std::max(1.0L, std::abs(expect)));
      // The chosen mode attains the optimum.
      const auto chosen = r.strategy.actions(e).first();
      CHECK(std::abs(static_cast<double>(tree.q(cfg, chosen, h) - (expect - std::min(cfg[2], m.sensor_range)))) <= 1e-9 * std::max(1.0L, std::abs(expect)));
    }
  }
}
