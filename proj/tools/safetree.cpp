// Command-line front end: one verb per pipeline step.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "safetree/bit_encoding.hpp"
#include "safetree/code_export.hpp"
#include "safetree/cruise_synthesis.hpp"
#include "safetree/error.hpp"
#include "safetree/harness.hpp"
#include "safetree/learner.hpp"
#include "safetree/pruning.hpp"
#include "safetree/strategy_view.hpp"

using namespace safetree;

namespace {

// Writes to --out when given, stdout otherwise.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

CruiseModel model_or_default(const std::string& path) { return path.empty() ? CruiseModel{} : load_model(path); }

DeterminizeRule parse_rule(const std::string& s) {
  if (s == "lexicographic") return DeterminizeRule::lexicographic_first;
  if (s == "uniform") return DeterminizeRule::uniform_seeded;
  throw ValidationError("unknown rule '" + s + "' (lexicographic or uniform)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-tree representations of safe controller strategies"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
    sub->add_option("--out", out, "Output file (stdout if omitted)");
  };

  std::string model_path, strategy_path, tree_path, allowed_path;
  std::size_t k = 2, rounds = 1, runs = 10'000, bdd_runs = 40;
  std::optional<std::size_t> horizon;
  std::string rule = "lexicographic", name = "cruise", encoding = "one-hot", function = "controller";
  std::vector<std::size_t> ks{2, 10, 100}, ps{0, 1, 2};
  bool zones = false, simulate_safe = false;

  auto* synth = app.add_subcommand("synth-safe", "Safety-game fixpoint on the cruise grid");
  synth->add_option("--model", model_path, "Model options JSON (defaults if omitted)");
  common(synth);

  auto* opt = app.add_subcommand("optimize", "Value iteration inside a permissive strategy");
  opt->add_option("--model", model_path, "Model options JSON");
  opt->add_option("--allowed", allowed_path, "Permissive strategy file")->required();
  opt->add_option("--horizon", horizon, "Horizon H (model value if omitted)");
  common(opt);

  auto* learn_cmd = app.add_subcommand("learn-dt", "Learn a decision tree from a strategy");
  learn_cmd->add_option("--strategy", strategy_path, "Strategy file")->required();
  learn_cmd->add_option("-k,--min-split", k, "Minimum split size")->capture_default_str();
  common(learn_cmd);

  auto* prune_cmd = app.add_subcommand("prune", "Safe pruning");
  prune_cmd->add_option("--tree", tree_path, "Tree JSON")->required();
  prune_cmd->add_option("-p,--rounds", rounds, "Pruning rounds")->capture_default_str();
  common(prune_cmd);

  auto* export_cmd = app.add_subcommand("export-code", "Emit a nested-if C function");
  export_cmd->add_option("--tree", tree_path, "Tree JSON")->required();
  export_cmd->add_option("--function", function, "Function name")->capture_default_str();
  common(export_cmd);

  auto* bdd_cmd = app.add_subcommand("bdd-report", "BDD sizes over random orders vs DT size (CSV)");
  bdd_cmd->add_option("--strategy", strategy_path, "Strategy file")->required();
  bdd_cmd->add_option("-R,--runs", bdd_runs, "Random initial orders")->capture_default_str();
  bdd_cmd->add_option("--name", name, "Model column")->capture_default_str();
  bdd_cmd->add_option("--encoding", encoding, "Action bits: one-hot or binary")->capture_default_str();
  common(bdd_cmd);

  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo estimate of E[D]");
  sim_cmd->add_option("--model", model_path, "Model options JSON");
  auto* sim_strategy = sim_cmd->add_option("--strategy", strategy_path, "Strategy file");
  auto* sim_tree = sim_cmd->add_option("--tree", tree_path, "Tree JSON");
  sim_strategy->excludes(sim_tree);
  sim_cmd->add_option("--rule", rule, "lexicographic or uniform")->capture_default_str();
  sim_cmd->add_option("--runs", runs, "Number of runs")->capture_default_str();
  sim_cmd->add_option("--horizon", horizon, "Horizon H (model value if omitted)");
  common(sim_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "k x p sweep (CSV)");
  sweep_cmd->add_option("--model", model_path, "Model options JSON");
  sweep_cmd->add_option("--safe", allowed_path, "Safe strategy (synthesized if omitted)");
  sweep_cmd->add_option("--ks", ks, "Minimum split sizes")->delimiter(',');
  sweep_cmd->add_option("--ps", ps, "Pruning rounds")->delimiter(',');
  sweep_cmd->add_option("--runs", runs, "Runs per cell")->capture_default_str();
  sweep_cmd->add_option("--horizon", horizon, "Horizon H (model value if omitted)");
  sweep_cmd->add_flag("--zones", zones, "Add ratio columns relative to cell (2,0)");
  sweep_cmd->add_flag("--simulate-safe", simulate_safe, "Also simulate T_safe determinized uniformly");
  common(sweep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    std::ostringstream text;
    if (synth->parsed()) {
      const auto model = model_or_default(model_path);
      const auto safe = synthesize_safe(model);
      write_strategy(safe.to_table(), text);
      std::cerr << "safe states: " << safe.safe_count() << " of " << safe.space().size() << " (" << safe.iterations
                << " rounds)\n";
    } else if (opt->parsed()) {
      const auto model = model_or_default(model_path);
      const auto result = optimize(model, load_strategy(allowed_path), horizon.value_or(model.horizon));
      write_strategy(result.strategy, text);
    } else if (learn_cmd->parsed()) {
      const auto tree = learn(load_strategy(strategy_path), k);
      text << tree.to_json().dump(1) << "\n";
      std::cerr << "tree size: " << tree.size() << "\n";
    } else if (prune_cmd->parsed()) {
      const auto tree = safe_prune(load_tree(tree_path), rounds);
      text << tree.to_json().dump(1) << "\n";
      std::cerr << "tree size: " << tree.size() << "\n";
    } else if (export_cmd->parsed()) {
      CodeExportOptions o;
      o.function_name = function;
      text << export_code(load_tree(tree_path), o);
    } else if (bdd_cmd->parsed()) {
      if (encoding != "one-hot" && encoding != "binary") throw ValidationError("encoding must be one-hot or binary");
      const auto row = report_table1(name, load_strategy(strategy_path), bdd_runs, seed,
                                     encoding == "binary" ? ActionEncoding::binary : ActionEncoding::one_hot);
      write_table1_csv(text, std::span(&row, 1));
    } else if (sim_cmd->parsed()) {
      const auto model = model_or_default(model_path);
      ControllerFactory factory;
      if (!tree_path.empty()) {
        factory = tree_controller(std::make_shared<const DecisionTree>(load_tree(tree_path)), parse_rule(rule));
      } else if (!strategy_path.empty()) {
        factory = table_controller(std::make_shared<const StrategyTable>(load_strategy(strategy_path)), parse_rule(rule));
      } else {
        throw ValidationError("simulate needs --strategy or --tree");
      }
      const auto est = estimate_expected_cost(model, factory, horizon.value_or(model.horizon), runs, seed);
      text.precision(10);
      text << "runs,mean_cost,ci_half_width,violations\n"
           << est.runs << "," << est.mean << "," << est.half_width << "," << est.violations << "\n";
    } else if (sweep_cmd->parsed()) {
      const auto model = model_or_default(model_path);
      const auto safe = allowed_path.empty() ? synthesize_safe(model).to_table() : load_strategy(allowed_path);
      SweepOptions o;
      o.ks = ks;
      o.ps = ps;
      o.runs = runs;
      o.horizon = horizon.value_or(model.horizon);
      o.seed = seed;
      o.simulate_safe_tree = simulate_safe;
      const auto cells = sweep(model, safe, o);
      write_sweep_csv(text, cells, zones);
    }
    emit(out, text.str());
    return 0;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const NoPureActionError& e) {
    std::cerr << "no pure action: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
