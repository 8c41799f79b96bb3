#pragma once

// Two-car cruise control.
//
// Ego follows Front on a line. Both cars pick an acceleration mode in
// {-a, 0, +a} (indices dec = 0, neu = 1, acc = 2); velocities saturate at
// their bounds and the gap integrates vF - vE. Decisions happen every
// `period` seconds: the gap flows for one period, Front picks a new mode,
// then Ego picks a new mode.
//
// The discrete view used by synthesis and by controllers quantizes the gap to
// cells: cell d (0 <= d < sensor) holds gaps in [d, d + 1), cell `sensor`
// holds exactly the sensor range, and cell sensor + 1 (FAR) holds everything
// beyond it. Velocities stay on the integer grid because the period and the
// acceleration are integers.

#include <cstddef>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "safetree/strategy.hpp"

namespace safetree {

inline constexpr std::size_t mode_count = 3;

enum class OpponentRule {
  uniform,                // every mode, uniformly
  no_saturating_choices,  // modes that would push vF past a bound are dropped
  neutral,                // Front always keeps its velocity
};

struct CruiseState {
  double ego_velocity = 0;
  double front_velocity = 0;
  double distance = 0;  // true gap; may exceed the sensor range
  std::size_t ego_mode = 1;
  std::size_t front_mode = 1;
};

struct VelocityRange {
  Value min = -10;
  Value max = 20;
};

struct CruiseModel {
  Value period = 1;
  Value safe_gap = 5;
  Value sensor_range = 200;
  Value acceleration = 2;
  VelocityRange ego_velocity;
  VelocityRange front_velocity;
  OpponentRule opponent = OpponentRule::uniform;
  std::size_t horizon = 100;
  std::vector<CruiseState> initial_states{CruiseState{0, 0, 100, 1, 1}};

  // Throws ValidationError.
  void validate() const;

  Value far_cell() const noexcept { return sensor_range + 1; }
  double mode_acceleration(std::size_t mode) const {
    return static_cast<double>((static_cast<Value>(mode) - 1) * acceleration);
  }
  // Mode index of an acceleration value; throws for values outside {-a, 0, a}.
  std::size_t mode_of(Value acceleration) const;

  // Cell of a gap; negative gaps land in cell 0.
  Value cell_of(double gap) const;
  // Smallest gap in the cell; FAR reports the sensor range.
  Value cell_lower(Value cell) const { return cell >= sensor_range ? sensor_range : cell; }

  // Front modes available after a flow that ends at this front velocity.
  std::vector<std::size_t> opponent_support(double front_velocity) const;

  // (ego_velocity, front_velocity, distance cell, front_mode acceleration) -> {dec, neu, acc}
  FeatureSchema strategy_schema() const;
  static Alphabet mode_alphabet();
  // Quantized configuration a controller observes in state s.
  std::vector<Value> observe(const CruiseState& s) const;

  nlohmann::json to_json() const;
  static CruiseModel from_json(const nlohmann::json& j);
};

CruiseModel load_model(const std::filesystem::path& path);

OpponentRule parse_opponent_rule(const std::string& name);
std::string to_string(OpponentRule rule);

// State after tau seconds (0 <= tau <= period) under the current modes.
CruiseState flow(const CruiseModel& model, const CruiseState& s, double tau);

// Exact minimum of the gap over [0, tau]. The velocity profiles are piecewise
// linear, so the gap is piecewise quadratic; candidates are the end points,
// the saturation times and the zeros of the relative velocity.
double min_gap(const CruiseModel& model, const CruiseState& s, double tau);
inline double min_gap_over_period(const CruiseModel& model, const CruiseState& s) {
  return min_gap(model, s, static_cast<double>(model.period));
}

}  // namespace safetree
