#include "safetree/cruise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "safetree/error.hpp"

namespace safetree {

using nlohmann::json;

namespace {

// One car: constant acceleration until a velocity bound, then constant velocity.
struct Profile {
  double v0, acc, lo, hi;

  double saturation_time() const {
    if (acc > 0) return (hi - v0) / acc;
    if (acc < 0) return (lo - v0) / acc;
    return INFINITY;
  }
  double velocity(double t) const {
    const double ts = saturation_time();
    return t <= ts ? v0 + acc * t : (acc > 0 ? hi : lo);
  }
  double position(double t) const {
    const double ts = saturation_time();
    if (t <= ts) return v0 * t + 0.5 * acc * t * t;
    return v0 * ts + 0.5 * acc * ts * ts + (acc > 0 ? hi : lo) * (t - ts);
  }
};

Profile ego_profile(const CruiseModel& m, const CruiseState& s) {
  return {s.ego_velocity, m.mode_acceleration(s.ego_mode), static_cast<double>(m.ego_velocity.min),
          static_cast<double>(m.ego_velocity.max)};
}
Profile front_profile(const CruiseModel& m, const CruiseState& s) {
  return {s.front_velocity, m.mode_acceleration(s.front_mode), static_cast<double>(m.front_velocity.min),
          static_cast<double>(m.front_velocity.max)};
}

VelocityRange range_from_json(const json& j, VelocityRange fallback) {
  if (j.is_null()) return fallback;
  return {j.value("min", fallback.min), j.value("max", fallback.max)};
}

}  // namespace

void CruiseModel::validate() const {
  if (period < 1) throw ValidationError("period must be a positive integer");
  if (acceleration < 1) throw ValidationError("acceleration must be a positive integer");
  if (safe_gap < 0 || safe_gap >= sensor_range) throw ValidationError("need 0 <= safe_gap < sensor_range");
  if (ego_velocity.min >= ego_velocity.max || front_velocity.min >= front_velocity.max)
    throw ValidationError("velocity ranges must be non-empty intervals");
  if (initial_states.empty()) throw ValidationError("at least one initial state is required");
  for (const auto& s : initial_states) {
    auto on_grid = [](double v, VelocityRange r) { return v == std::floor(v) && v >= r.min && v <= r.max; };
    if (!on_grid(s.ego_velocity, ego_velocity) || !on_grid(s.front_velocity, front_velocity))
      throw ValidationError("initial velocities must be integers inside their ranges");
    if (!(s.distance >= 0)) throw ValidationError("initial distance must be non-negative");
    if (s.ego_mode >= mode_count || s.front_mode >= mode_count) throw ValidationError("bad initial mode");
  }
}

std::size_t CruiseModel::mode_of(Value a) const {
  for (std::size_t m = 0; m < mode_count; ++m)
    if (static_cast<Value>(mode_acceleration(m)) == a) return m;
  throw ValidationError("acceleration " + std::to_string(a) + " is not a mode");
}

Value CruiseModel::cell_of(double gap) const {
  if (gap > static_cast<double>(sensor_range)) return far_cell();
  if (gap <= 0) return 0;
  return static_cast<Value>(std::floor(gap));
}

std::vector<std::size_t> CruiseModel::opponent_support(double vf) const {
  switch (opponent) {
    case OpponentRule::neutral:
      return {1};
    case OpponentRule::no_saturating_choices: {
      std::vector<std::size_t> out;
      for (std::size_t m = 0; m < mode_count; ++m) {
        const double next = vf + mode_acceleration(m) * static_cast<double>(period);
        if (next >= static_cast<double>(front_velocity.min) && next <= static_cast<double>(front_velocity.max))
          out.push_back(m);
      }
      return out;
    }
    case OpponentRule::uniform:
      break;
  }
  return {0, 1, 2};
}

FeatureSchema CruiseModel::strategy_schema() const {
  return FeatureSchema({
      Feature::ordered("ego_velocity", ego_velocity.min, ego_velocity.max),
      Feature::ordered("front_velocity", front_velocity.min, front_velocity.max),
      Feature::ordered("distance", 0, far_cell()),
      Feature::categorical("front_mode", {-acceleration, 0, acceleration}),
  });
}

Alphabet CruiseModel::mode_alphabet() { return Alphabet({"dec", "neu", "acc"}); }

std::vector<Value> CruiseModel::observe(const CruiseState& s) const {
  return {static_cast<Value>(std::lround(s.ego_velocity)), static_cast<Value>(std::lround(s.front_velocity)),
          cell_of(s.distance), static_cast<Value>(mode_acceleration(s.front_mode))};
}

OpponentRule parse_opponent_rule(const std::string& name) {
  if (name == "uniform") return OpponentRule::uniform;
  if (name == "no-saturating-choices") return OpponentRule::no_saturating_choices;
  if (name == "neutral") return OpponentRule::neutral;
  throw ValidationError("unknown opponent rule '" + name + "'");
}

std::string to_string(OpponentRule rule) {
  switch (rule) {
    case OpponentRule::no_saturating_choices:
      return "no-saturating-choices";
    case OpponentRule::neutral:
      return "neutral";
    case OpponentRule::uniform:
      break;
  }
  return "uniform";
}

json CruiseModel::to_json() const {
  json states = json::array();
  for (const auto& s : initial_states)
    states.push_back({{"ego_velocity", s.ego_velocity},
                      {"front_velocity", s.front_velocity},
                      {"distance", s.distance},
                      {"front_mode", static_cast<Value>(mode_acceleration(s.front_mode))}});
  return {{"period", period},
          {"safe_gap", safe_gap},
          {"sensor_range", sensor_range},
          {"acceleration", acceleration},
          {"ego_velocity", {{"min", ego_velocity.min}, {"max", ego_velocity.max}}},
          {"front_velocity", {{"min", front_velocity.min}, {"max", front_velocity.max}}},
          {"opponent", to_string(opponent)},
          {"horizon", horizon},
          {"initial_states", states}};
}

CruiseModel CruiseModel::from_json(const json& j) {
  CruiseModel m;
  try {
    m.period = j.value("period", m.period);
    m.safe_gap = j.value("safe_gap", m.safe_gap);
    m.sensor_range = j.value("sensor_range", m.sensor_range);
    m.acceleration = j.value("acceleration", m.acceleration);
    m.ego_velocity = range_from_json(j.value("ego_velocity", json()), m.ego_velocity);
    m.front_velocity = range_from_json(j.value("front_velocity", json()), m.front_velocity);
    m.opponent = parse_opponent_rule(j.value("opponent", std::string("uniform")));
    m.horizon = j.value("horizon", m.horizon);
    if (j.contains("initial_states")) {
      m.initial_states.clear();
      for (const auto& s : j.at("initial_states")) {
        CruiseState st;
        st.ego_velocity = s.value("ego_velocity", 0.0);
        st.front_velocity = s.value("front_velocity", 0.0);
        st.distance = s.value("distance", 100.0);
        st.front_mode = m.mode_of(s.value("front_mode", Value{0}));
        st.ego_mode = 1;
        m.initial_states.push_back(st);
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad model options: ") + e.what());
  }
  m.validate();
  return m;
}

CruiseModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return CruiseModel::from_json(j);
}

CruiseState flow(const CruiseModel& model, const CruiseState& s, double tau) {
  if (tau < 0 || tau > static_cast<double>(model.period)) throw ValidationError("flow duration outside [0, period]");
  const auto e = ego_profile(model, s);
  const auto f = front_profile(model, s);
  CruiseState out = s;
  out.ego_velocity = e.velocity(tau);
  out.front_velocity = f.velocity(tau);
  out.distance = s.distance + f.position(tau) - e.position(tau);
  return out;
}

double min_gap(const CruiseModel& model, const CruiseState& s, double tau) {
  if (tau < 0 || tau > static_cast<double>(model.period)) throw ValidationError("flow duration outside [0, period]");
  const auto e = ego_profile(model, s);
  const auto f = front_profile(model, s);
  auto gap = [&](double t) { return s.distance + f.position(t) - e.position(t); };
  auto rel = [&](double t) { return f.velocity(t) - e.velocity(t); };

  std::vector<double> cuts{0.0, tau};
  for (double t : {e.saturation_time(), f.saturation_time()})
    if (t > 0 && t < tau) cuts.push_back(t);
  std::sort(cuts.begin(), cuts.end());

  double best = std::min(gap(0.0), gap(tau));
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b <= a) continue;
    best = std::min(best, gap(b));
    // Relative velocity is linear on (a, b); an interior zero is a candidate.
    const double ra = rel(a), rb = rel(b);
    if ((ra < 0 && rb > 0) || (ra > 0 && rb < 0)) {
      const double t = a + (b - a) * ra / (ra - rb);
      best = std::min(best, gap(t));
    }
  }
  return best;
}

}  // namespace safetree
