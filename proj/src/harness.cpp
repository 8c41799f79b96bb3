#include "safetree/harness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "safetree/cruise_synthesis.hpp"
#include "safetree/error.hpp"
#include "safetree/learner.hpp"
#include "safetree/parallel.hpp"
#include "safetree/pruning.hpp"
#include "safetree/random.hpp"

namespace safetree {

ControllerFactory table_controller(std::shared_ptr<const StrategyTable> table, DeterminizeRule rule) {
  return [table, rule](std::uint64_t seed) -> Controller {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [table, rule, rng](std::span<const Value> config) -> std::size_t {
      const auto set = table->find(config);
      if (!set) throw ValidationError("strategy has no entry for a reached configuration");
      if (rule == DeterminizeRule::lexicographic_first) return set->first();
      const auto members = set->members();
      return members[uniform_below(*rng, members.size())];
    };
  };
}

ControllerFactory tree_controller(std::shared_ptr<const DecisionTree> tree, DeterminizeRule rule) {
  return [tree, rule](std::uint64_t seed) -> Controller {
    auto strategy = std::make_shared<DeterministicStrategy>(*tree, rule, seed);
    return [tree, strategy](std::span<const Value> config) { return (*strategy)(config); };
  };
}

Run simulate(const CruiseModel& model, Controller& controller, const CruiseState& initial, std::size_t horizon,
             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double sensor = static_cast<double>(model.sensor_range);
  const double safe_gap = static_cast<double>(model.safe_gap);
  auto decide = [&](CruiseState& s) {
    const auto mode = controller(model.observe(s));
    if (mode >= mode_count) throw ValidationError("controller returned an action outside the mode set");
    s.ego_mode = mode;
  };

  Run run;
  run.seed = seed;
  run.states.reserve(horizon + 1);
  run.min_gaps.reserve(horizon);
  CruiseState s = initial;
  if (horizon > 0) decide(s);
  for (std::size_t i = 0; i < horizon; ++i) {
    run.states.push_back(s);
    run.cost += std::min(s.distance, sensor);
    const double low = min_gap_over_period(model, s);
    run.min_gaps.push_back(low);
    if (s.distance < safe_gap || low < safe_gap) ++run.violations;
    s = flow(model, s, static_cast<double>(model.period));
    s.ego_velocity = std::round(s.ego_velocity);
    s.front_velocity = std::round(s.front_velocity);
    const auto supp = model.opponent_support(s.front_velocity);
    s.front_mode = supp[uniform_below(rng, supp.size())];
    if (i + 1 < horizon) decide(s);
  }
  run.states.push_back(s);
  return run;
}

CostEstimate estimate_expected_cost(const CruiseModel& model, const ControllerFactory& factory, std::size_t horizon,
                                    std::size_t runs, std::uint64_t seed) {
  if (runs == 0) throw ValidationError("at least one run is required");
  std::vector<double> costs(runs);
  std::vector<std::size_t> violations(runs);
  parallel_for(runs, [&](std::size_t r) {
    const auto run_seed = derive_seed(seed, r);
    auto controller = factory(derive_seed(run_seed, 1));
    const auto run = simulate(model, controller, model.initial_states[r % model.initial_states.size()], horizon, run_seed);
    costs[r] = run.cost;
    violations[r] = run.violations;
  });
  CostEstimate out;
  out.runs = runs;
  double sum = 0;
  for (const auto c : costs) sum += c;
  out.mean = sum / static_cast<double>(runs);
  if (runs > 1) {
    double ss = 0;
    for (const auto c : costs) ss += (c - out.mean) * (c - out.mean);
    out.half_width = 1.96 * std::sqrt(ss / static_cast<double>(runs - 1)) / std::sqrt(static_cast<double>(runs));
  }
  for (const auto v : violations) out.violations += v;
  return out;
}

std::vector<SweepCell> sweep(const CruiseModel& model, const StrategyTable& safe, const SweepOptions& options) {
  std::vector<SweepCell> cells;
  for (const auto k : options.ks) {
    std::optional<DecisionTree> learned;
    std::string error;
    try {
      learned = learn(safe, k);
    } catch (const NoPureActionError& e) {
      error = e.what();
    }
    for (const auto p : options.ps) {
      SweepCell cell;
      cell.k = k;
      cell.p = p;
      if (!learned) {
        cell.feasible = false;
        cell.error = error;
        cells.push_back(std::move(cell));
        continue;
      }
      auto pruned = std::make_shared<const DecisionTree>(safe_prune(*learned, p));
      cell.safe_tree_size = pruned->size();
      const auto restricted = to_table(*pruned, safe);
      cell.restricts_safe = is_sub_strategy(safe, restricted);
      const auto opt = optimize(model, restricted, options.horizon);
      auto tree = std::make_shared<const DecisionTree>(learn(opt.strategy, 2));
      cell.opt_tree_size = tree->size();
      cell.estimate = estimate_expected_cost(model, tree_controller(tree, DeterminizeRule::lexicographic_first),
                                             options.horizon, options.runs, options.seed);
      if (options.simulate_safe_tree)
        cell.safe_tree_estimate = estimate_expected_cost(
            model, tree_controller(pruned, DeterminizeRule::uniform_seeded), options.horizon, options.runs, options.seed);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepCell> cells, bool zones) {
  const SweepCell* ref = nullptr;
  for (const auto& c : cells)
    if (c.k == 2 && c.p == 0 && c.feasible) ref = &c;
  const bool safe_runs = std::any_of(cells.begin(), cells.end(), [](const SweepCell& c) { return c.safe_tree_estimate.has_value(); });
  out << "k,p,feasible,safe_tree_size,opt_tree_size,restricts_safe,mean_cost,ci_half_width,violations";
  if (zones) out << ",size_ratio,cost_ratio";
  if (safe_runs) out << ",safe_tree_mean_cost,safe_tree_violations";
  out << "\n";
  const auto precision = out.precision(10);
  for (const auto& c : cells) {
    out << c.k << "," << c.p << "," << (c.feasible ? 1 : 0) << ",";
    if (!c.feasible) {
      out << ",,,,,";
      if (zones) out << ",,";
      if (safe_runs) out << ",,";
      out << "\n";
      continue;
    }
    out << c.safe_tree_size << "," << c.opt_tree_size << "," << (c.restricts_safe ? 1 : 0) << "," << c.estimate.mean
        << "," << c.estimate.half_width << "," << c.estimate.violations;
    if (zones) {
      out << ",";
      if (ref) out << static_cast<double>(c.opt_tree_size) / static_cast<double>(ref->opt_tree_size);
      out << ",";
      if (ref) out << c.estimate.mean / ref->estimate.mean;
    }
    if (safe_runs) {
      out << ",";
      if (c.safe_tree_estimate) out << c.safe_tree_estimate->mean;
      out << ",";
      if (c.safe_tree_estimate) out << c.safe_tree_estimate->violations;
    }
    out << "\n";
  }
  out.precision(precision);
}

Table1Row report_table1(const std::string& model_name, const StrategyTable& strategy, std::size_t runs,
                        std::uint64_t seed, ActionEncoding encoding) {
  const BitEncoding enc(strategy.schema(), strategy.alphabet(), encoding);
  Table1Row row;
  row.model = model_name;
  row.variables = enc.variable_count();
  row.list = strategy.size();
  const auto full = strategy.alphabet().all();
  for (const auto a : strategy.all_actions()) row.relevant += a != full;
  row.runs = runs;
  const auto exp = random_order_experiment(strategy, enc, runs, seed);
  row.bdd_min = exp.min;
  row.bdd_median = exp.median;
  row.bdd_max = exp.max;
  row.dt_size = learn(strategy, 2).size();
  return row;
}

void write_table1_csv(std::ostream& out, std::span<const Table1Row> rows) {
  out << "model,variables,list,relevant,R,bdd_min,bdd_median,bdd_max,dt_size\n";
  for (const auto& r : rows)
    out << r.model << "," << r.variables << "," << r.list << "," << r.relevant << "," << r.runs << "," << r.bdd_min
        << "," << r.bdd_median << "," << r.bdd_max << "," << r.dt_size << "\n";
}

}  // namespace safetree
