#pragma once

// Safety game and finite-horizon optimisation on the discrete cruise grid.
//
// A discrete state is (ego velocity, front velocity, gap cell, front mode),
// observed right after Front has moved. Gap cells are intervals (see
// cruise.hpp), and every successor computation covers all cells the interval
// can reach, so a state proven safe is safe for every real gap in its cell.

#include <cstdint>
#include <vector>

#include "safetree/cruise.hpp"
#include "safetree/strategy.hpp"

namespace safetree {

struct DiscreteState {
  Value ego_velocity;
  Value front_velocity;
  Value cell;
  std::size_t front_mode;
};

// Dense numbering of the discrete states.
class StateSpace {
 public:
  explicit StateSpace(const CruiseModel& model);

  std::size_t size() const noexcept { return size_; }
  std::size_t index(const DiscreteState& s) const;
  DiscreteState state(std::size_t index) const;
  bool contains(std::span<const Value> config) const;
  std::size_t index_of(std::span<const Value> config) const;  // strategy configuration
  std::vector<Value> configuration(std::size_t index) const;

 private:
  const CruiseModel* model_;
  std::size_t ne_, nf_, nc_, size_;
};

// Gap change over one period for a velocity pair and a mode pair. Both are
// independent of the gap itself.
struct PeriodEffect {
  double displacement;      // d(P) - d(0)
  double min_displacement;  // min over [0, P] of d(t) - d(0), never positive
  Value ego_velocity;       // after the period
  Value front_velocity;
};

PeriodEffect period_effect(const CruiseModel& model, Value ego_velocity, Value front_velocity,
                           std::size_t ego_mode, std::size_t front_mode);

// Cells reachable after adding `displacement` to any gap in `cell`:
// [first, last] (empty if first > last) plus FAR when `far` is set.
struct CellRange {
  Value first, last;
  bool far;
};
CellRange successor_cells(const CruiseModel& model, Value cell, double displacement);

class SafeSet {
 public:
  SafeSet(CruiseModel model, std::vector<ActionSet> allowed);

  const CruiseModel& model() const noexcept { return model_; }
  const StateSpace& space() const noexcept { return space_; }
  // Empty set for unsafe states.
  ActionSet allowed(std::size_t index) const { return allowed_.at(index); }
  bool safe(std::size_t index) const { return !allowed_.at(index).empty(); }
  std::size_t safe_count() const;
  std::size_t iterations = 0;  // fixpoint rounds, informational

  // Safe states only, in state-index order.
  StrategyTable to_table() const;
  static SafeSet from_table(const CruiseModel& model, const StrategyTable& table);

 private:
  CruiseModel model_;
  StateSpace space_;
  std::vector<ActionSet> allowed_;
};

// Greatest fixpoint of the safety game. A state is safe iff its gap is at
// least safe_gap and some ego mode keeps the gap at or above safe_gap for the
// whole period and leads only to safe states under every Front mode in the
// support. Every such mode is allowed. Jacobi rounds, so the result does not
// depend on the sweep order. Throws InfeasibleError if an initial state of
// the model is unsafe.
SafeSet synthesize_safe(const CruiseModel& model);

struct OptimizationResult {
  StrategyTable strategy;      // one action per configuration of `allowed`
  std::vector<double> values;  // V_H per entry of `strategy`
};

// Finite-horizon value iteration minimising the expected sum of gaps over
// the next `horizon` decision points (FAR costs the sensor range), under the
// model's Front distribution, restricted to the modes `allowed` permits.
// The successor of cell c is the cell of c + displacement (FAR counts as
// sensor + 1). The greedy choice at the full horizon is returned; ties go to
// the lowest mode. Throws ValidationError if a successor leaves the domain
// of `allowed`.
OptimizationResult optimize(const CruiseModel& model, const StrategyTable& allowed, std::size_t horizon);

}  // namespace safetree
