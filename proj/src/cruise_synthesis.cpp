#include "safetree/cruise_synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "safetree/error.hpp"

namespace safetree {

StateSpace::StateSpace(const CruiseModel& model)
    : model_(&model),
      ne_(static_cast<std::size_t>(model.ego_velocity.max - model.ego_velocity.min + 1)),
      nf_(static_cast<std::size_t>(model.front_velocity.max - model.front_velocity.min + 1)),
      nc_(static_cast<std::size_t>(model.far_cell() + 1)),
      size_(ne_ * nf_ * nc_ * mode_count) {}

std::size_t StateSpace::index(const DiscreteState& s) const {
  const auto ie = static_cast<std::size_t>(s.ego_velocity - model_->ego_velocity.min);
  const auto jf = static_cast<std::size_t>(s.front_velocity - model_->front_velocity.min);
  const auto c = static_cast<std::size_t>(s.cell);
  if (ie >= ne_ || jf >= nf_ || c >= nc_ || s.front_mode >= mode_count) throw ValidationError("state outside the grid");
  return ((ie * nf_ + jf) * nc_ + c) * mode_count + s.front_mode;
}

DiscreteState StateSpace::state(std::size_t index) const {
  DiscreteState s;
  s.front_mode = index % mode_count;
  index /= mode_count;
  s.cell = static_cast<Value>(index % nc_);
  index /= nc_;
  s.front_velocity = model_->front_velocity.min + static_cast<Value>(index % nf_);
  s.ego_velocity = model_->ego_velocity.min + static_cast<Value>(index / nf_);
  return s;
}

bool StateSpace::contains(std::span<const Value> c) const {
  return c.size() == 4 && c[0] >= model_->ego_velocity.min && c[0] <= model_->ego_velocity.max &&
         c[1] >= model_->front_velocity.min && c[1] <= model_->front_velocity.max && c[2] >= 0 &&
         c[2] <= model_->far_cell() && (c[3] == 0 || c[3] == model_->acceleration || c[3] == -model_->acceleration);
}

std::size_t StateSpace::index_of(std::span<const Value> c) const {
  if (!contains(c)) throw ValidationError("configuration outside the cruise grid");
  return index({c[0], c[1], c[2], model_->mode_of(c[3])});
}

std::vector<Value> StateSpace::configuration(std::size_t index) const {
  const auto s = state(index);
  return {s.ego_velocity, s.front_velocity, s.cell, static_cast<Value>(model_->mode_acceleration(s.front_mode))};
}

PeriodEffect period_effect(const CruiseModel& model, Value ve, Value vf, std::size_t ego_mode, std::size_t front_mode) {
  CruiseState s{static_cast<double>(ve), static_cast<double>(vf), 0.0, ego_mode, front_mode};
  const auto end = flow(model, s, static_cast<double>(model.period));
  return {end.distance, min_gap_over_period(model, s), static_cast<Value>(std::lround(end.ego_velocity)),
          static_cast<Value>(std::lround(end.front_velocity))};
}

CellRange successor_cells(const CruiseModel& model, Value cell, double displacement) {
  const auto sensor = model.sensor_range;
  const double top = static_cast<double>(sensor);
  auto floor_cell = [](double x) { return std::max<Value>(0, static_cast<Value>(std::floor(x))); };
  if (cell > sensor) {  // FAR: every gap above the sensor range
    if (displacement >= 0) return {1, 0, true};
    return {floor_cell(top + displacement), sensor, true};
  }
  if (cell == sensor) {
    const double p = top + displacement;
    if (p > top) return {1, 0, true};
    return {floor_cell(p), floor_cell(p), false};
  }
  const double lo = static_cast<double>(cell) + displacement;
  const double hi = lo + 1.0;  // exclusive
  if (lo > top) return {1, 0, true};
  return {floor_cell(lo), std::min<Value>(sensor, static_cast<Value>(std::ceil(hi)) - 1), hi > top};
}

SafeSet::SafeSet(CruiseModel model, std::vector<ActionSet> allowed)
    : model_(std::move(model)), space_(model_), allowed_(std::move(allowed)) {
  if (allowed_.size() != space_.size()) throw ValidationError("safe set does not match the state space");
}

std::size_t SafeSet::safe_count() const {
  return static_cast<std::size_t>(std::count_if(allowed_.begin(), allowed_.end(), [](ActionSet a) { return !a.empty(); }));
}

StrategyTable SafeSet::to_table() const {
  StrategyTable::Builder b(model_.strategy_schema(), CruiseModel::mode_alphabet());
  b.reserve(safe_count());
  for (std::size_t i = 0; i < allowed_.size(); ++i)
    if (!allowed_[i].empty()) b.add(space_.configuration(i), allowed_[i]);
  return std::move(b).build();
}

SafeSet SafeSet::from_table(const CruiseModel& model, const StrategyTable& table) {
  if (!(table.schema() == model.strategy_schema()) || !(table.alphabet() == CruiseModel::mode_alphabet()))
    throw ValidationError("strategy does not use the cruise schema");
  StateSpace space(model);
  std::vector<ActionSet> allowed(space.size());
  for (std::size_t e = 0; e < table.size(); ++e) allowed[space.index_of(table.configuration(e))] = table.actions(e);
  return SafeSet(model, std::move(allowed));
}

namespace {

// Per (ego velocity, front velocity, ego mode, front mode) effects plus the
// Front support after each, shared by synthesis and optimisation.
struct Dynamics {
  explicit Dynamics(const CruiseModel& m) : model(m), space(m) {
    ne = static_cast<std::size_t>(m.ego_velocity.max - m.ego_velocity.min + 1);
    nf = static_cast<std::size_t>(m.front_velocity.max - m.front_velocity.min + 1);
    nc = static_cast<std::size_t>(m.far_cell() + 1);
    effects.reserve(ne * nf * mode_count * mode_count);
    for (std::size_t ie = 0; ie < ne; ++ie)
      for (std::size_t jf = 0; jf < nf; ++jf)
        for (std::size_t c = 0; c < mode_count; ++c)
          for (std::size_t u = 0; u < mode_count; ++u)
            effects.push_back(period_effect(m, m.ego_velocity.min + static_cast<Value>(ie),
                                            m.front_velocity.min + static_cast<Value>(jf), c, u));
    for (std::size_t jf = 0; jf < nf; ++jf)
      support.push_back(m.opponent_support(static_cast<double>(m.front_velocity.min + static_cast<Value>(jf))));
  }

  const PeriodEffect& effect(const DiscreteState& s, std::size_t c) const {
    const auto ie = static_cast<std::size_t>(s.ego_velocity - model.ego_velocity.min);
    const auto jf = static_cast<std::size_t>(s.front_velocity - model.front_velocity.min);
    return effects[((ie * nf + jf) * mode_count + c) * mode_count + s.front_mode];
  }
  const std::vector<std::size_t>& support_at(Value vf) const {
    return support[static_cast<std::size_t>(vf - model.front_velocity.min)];
  }
  // Index of (ve, vf, cell 0, mode 0); cells and modes follow contiguously.
  std::size_t base(Value ve, Value vf) const { return space.index({ve, vf, 0, 0}); }

  const CruiseModel& model;
  StateSpace space;
  std::size_t ne, nf, nc;
  std::vector<PeriodEffect> effects;
  std::vector<std::vector<std::size_t>> support;
};

ActionSet winning_modes(const Dynamics& dyn, std::size_t index, const std::vector<char>& safe) {
  const auto& m = dyn.model;
  const auto s = dyn.space.state(index);
  const double lower = static_cast<double>(m.cell_lower(s.cell));
  ActionSet out;
  for (std::size_t c = 0; c < mode_count; ++c) {
    const auto& e = dyn.effect(s, c);
    if (lower + e.min_displacement < static_cast<double>(m.safe_gap)) continue;
    const auto r = successor_cells(m, s.cell, e.displacement);
    const auto base = dyn.base(e.ego_velocity, e.front_velocity);
    bool ok = true;
    for (const auto u : dyn.support_at(e.front_velocity)) {
      for (Value cell = r.first; ok && cell <= r.last; ++cell) ok = safe[base + static_cast<std::size_t>(cell) * mode_count + u];
      if (ok && r.far) ok = safe[base + static_cast<std::size_t>(m.far_cell()) * mode_count + u];
      if (!ok) break;
    }
    if (ok) out.insert(c);
  }
  return out;
}

}  // namespace

SafeSet synthesize_safe(const CruiseModel& model) {
  model.validate();
  Dynamics dyn(model);
  const auto n = dyn.space.size();
  std::vector<char> safe(n), next(n);
  for (std::size_t i = 0; i < n; ++i) safe[i] = model.cell_lower(dyn.space.state(i).cell) >= model.safe_gap;

  std::size_t rounds = 0;
  for (bool changed = true; changed;) {
    ++rounds;
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = safe[i] && !winning_modes(dyn, i, safe).empty();
      changed |= next[i] != safe[i];
    }
    safe.swap(next);
  }

  std::vector<ActionSet> allowed(n);
  for (std::size_t i = 0; i < n; ++i)
    if (safe[i]) allowed[i] = winning_modes(dyn, i, safe);
  SafeSet out(model, std::move(allowed));
  out.iterations = rounds;

  for (const auto& s : model.initial_states) {
    const auto cfg = model.observe(s);
    if (!out.safe(out.space().index_of(cfg)))
      throw InfeasibleError("initial state (ego_velocity=" + std::to_string(cfg[0]) + ", front_velocity=" +
                            std::to_string(cfg[1]) + ", distance=" + std::to_string(cfg[2]) +
                            ") is outside the safe region");
  }
  return out;
}

OptimizationResult optimize(const CruiseModel& model, const StrategyTable& allowed, std::size_t horizon) {
  model.validate();
  if (!(allowed.schema() == model.strategy_schema()) || !(allowed.alphabet() == CruiseModel::mode_alphabet()))
    throw ValidationError("allowed strategy does not use the cruise schema");
  Dynamics dyn(model);
  const auto n = allowed.size();
  std::vector<std::int32_t> entry_of(dyn.space.size(), -1);
  for (std::size_t e = 0; e < n; ++e)
    entry_of[dyn.space.index_of(allowed.configuration(e))] = static_cast<std::int32_t>(e);

  // succ[(e * 3 + c) * 3 + k] for the k-th Front mode of the support.
  std::vector<std::int32_t> succ(n * mode_count * mode_count, -1);
  std::vector<std::uint8_t> fanout(n * mode_count, 0);
  std::vector<double> cost(n);
  for (std::size_t e = 0; e < n; ++e) {
    const auto cfg = allowed.configuration(e);
    const auto s = dyn.space.state(dyn.space.index_of(cfg));
    cost[e] = static_cast<double>(model.cell_lower(s.cell));
    for (const auto c : allowed.actions(e).members()) {
      const auto& eff = dyn.effect(s, c);
      const auto cell = model.cell_of(static_cast<double>(s.cell) + eff.displacement);
      const auto& supp = dyn.support_at(eff.front_velocity);
      fanout[e * mode_count + c] = static_cast<std::uint8_t>(supp.size());
      for (std::size_t k = 0; k < supp.size(); ++k) {
        const auto target = entry_of[dyn.space.index({eff.ego_velocity, eff.front_velocity, cell, supp[k]})];
        if (target < 0)
          throw ValidationError("successor of (" + std::to_string(cfg[0]) + "," + std::to_string(cfg[1]) + "," +
                                std::to_string(cfg[2]) + "," + std::to_string(cfg[3]) + ") under " +
                                CruiseModel::mode_alphabet().name(c) + " leaves the allowed domain");
        succ[(e * mode_count + c) * mode_count + k] = target;
      }
    }
  }

  auto q = [&](const std::vector<double>& v, std::size_t e, std::size_t c) {
    const auto m = fanout[e * mode_count + c];
    double sum = 0;
    for (std::size_t k = 0; k < m; ++k) sum += v[static_cast<std::size_t>(succ[(e * mode_count + c) * mode_count + k])];
    return sum / m;
  };
  auto best_mode = [&](const std::vector<double>& v, std::size_t e, double& best) {
    std::size_t arg = mode_count;
    for (const auto c : allowed.actions(e).members()) {
      const double x = q(v, e, c);
      if (arg == mode_count || x < best - 1e-12 * std::max(1.0, std::abs(best))) {
        best = x;
        arg = c;
      }
    }
    return arg;
  };

  std::vector<double> prev(n, 0.0), cur(n, 0.0);
  for (std::size_t h = 1; h <= horizon; ++h) {
    for (std::size_t e = 0; e < n; ++e) {
      double best = 0;
      best_mode(prev, e, best);
      cur[e] = cost[e] + best;
    }
    if (h < horizon) prev.swap(cur);
  }
  // Greedy choice against V_{H-1}; with H = 0 every choice ties.
  if (horizon == 0) cur.assign(n, 0.0);

  StrategyTable::Builder b(allowed.schema(), allowed.alphabet());
  b.reserve(n);
  for (std::size_t e = 0; e < n; ++e) {
    double best = 0;
    const auto c = horizon == 0 ? allowed.actions(e).first() : best_mode(prev, e, best);
    b.add(allowed.configuration(e), ActionSet::single(c));
  }
  return {std::move(b).build(), std::move(cur)};
}

}  // namespace safetree
