#pragma once

// Monte-Carlo evaluation, the k x p sweep and the size report.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safetree/bit_encoding.hpp"
#include "safetree/cruise.hpp"
#include "safetree/decision_tree.hpp"
#include "safetree/strategy.hpp"
#include "safetree/strategy_view.hpp"

namespace safetree {

// Picks an ego mode for an observed configuration.
using Controller = std::function<std::size_t(std::span<const Value>)>;
// Builds a fresh controller for one run; the argument is the run's seed.
using ControllerFactory = std::function<Controller(std::uint64_t)>;

ControllerFactory table_controller(std::shared_ptr<const StrategyTable> table, DeterminizeRule rule);
ControllerFactory tree_controller(std::shared_ptr<const DecisionTree> tree, DeterminizeRule rule);

struct Run {
  std::uint64_t seed = 0;
  std::vector<CruiseState> states;  // decision points s_0 .. s_H, ego_mode = the choice made there
  std::vector<double> min_gaps;     // lowest gap during each of the H periods
  double cost = 0;                  // sum of gaps at s_0 .. s_{H-1}, capped at the sensor range
  std::size_t violations = 0;       // decision gaps or period minima below safe_gap
};

// One run: at each decision point the controller picks, the gap flows for a
// period, then Front draws uniformly from its support.
Run simulate(const CruiseModel& model, Controller& controller, const CruiseState& initial, std::size_t horizon,
             std::uint64_t seed);

struct CostEstimate {
  double mean = 0;
  double half_width = 0;  // 95% normal-approximation half-width
  std::size_t runs = 0;
  std::size_t violations = 0;
};

// Run r starts from initial_states[r % count] with seed derive_seed(seed, r).
CostEstimate estimate_expected_cost(const CruiseModel& model, const ControllerFactory& factory, std::size_t horizon,
                                    std::size_t runs, std::uint64_t seed);

struct SweepOptions {
  std::vector<std::size_t> ks{2, 10, 100};
  std::vector<std::size_t> ps{0, 1, 2};
  std::size_t horizon = 100;
  std::size_t runs = 10'000;
  std::uint64_t seed = 0;
  // Also simulate T^{k,p}_safe itself, determinized uniformly at random.
  bool simulate_safe_tree = false;
};

struct SweepCell {
  std::size_t k = 0, p = 0;
  bool feasible = true;
  std::string error;
  std::size_t safe_tree_size = 0;  // |T^{k,p}_safe|
  std::size_t opt_tree_size = 0;   // |T^{k,p}_opt|
  bool restricts_safe = false;     // to_table(T^{k,p}_safe) is a sub-strategy of the safe strategy
  CostEstimate estimate;           // T^{k,p}_opt, lexicographic
  std::optional<CostEstimate> safe_tree_estimate;
};

// For every (k, p): learn T_safe with minimum split k, prune p rounds, read
// it back over the safe strategy's domain, optimise within it, learn the
// result exactly and simulate that tree. A k whose tree has a leaf without
// pure actions marks its cells infeasible.
std::vector<SweepCell> sweep(const CruiseModel& model, const StrategyTable& safe, const SweepOptions& options);

// Columns: k,p,feasible,safe_tree_size,opt_tree_size,restricts_safe,mean_cost,ci_half_width,violations
// then, with zones, size_ratio,cost_ratio relative to cell (2, 0), then
// safe_tree_mean_cost,safe_tree_violations when any cell simulated T_safe.
void write_sweep_csv(std::ostream& out, std::span<const SweepCell> cells, bool zones);

struct Table1Row {
  std::string model;
  std::size_t variables = 0;  // encoding bits
  std::size_t list = 0;       // strategy entries
  std::size_t relevant = 0;   // entries not allowing every action
  std::size_t runs = 0;       // R
  std::size_t bdd_min = 0, bdd_median = 0, bdd_max = 0;
  std::size_t dt_size = 0;
};

Table1Row report_table1(const std::string& model_name, const StrategyTable& strategy, std::size_t runs,
                        std::uint64_t seed, ActionEncoding encoding = ActionEncoding::one_hot);

void write_table1_csv(std::ostream& out, std::span<const Table1Row> rows);

}  // namespace safetree
