#include "safetree/bit_encoding.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "safetree/error.hpp"
#include "safetree/parallel.hpp"
#include "safetree/random.hpp"

namespace safetree {

namespace {
std::size_t bits_for(std::uint64_t count) {
  return count <= 1 ? 0 : static_cast<std::size_t>(std::bit_width(count - 1));
}
}  // namespace

BitEncoding::BitEncoding(FeatureSchema schema, Alphabet alphabet, ActionEncoding actions)
    : schema_(std::move(schema)), alphabet_(std::move(alphabet)), action_encoding_(actions) {
  if (alphabet_.size() == 0) throw ValidationError("empty action alphabet");
  for (const auto& f : schema_.features()) {
    firsts_.push_back(variables_);
    widths_.push_back(bits_for(f.domain_size()));
    variables_ += widths_.back();
  }
  action_width_ = actions == ActionEncoding::one_hot ? alphabet_.size() : std::max<std::size_t>(1, bits_for(alphabet_.size()));
  variables_ += action_width_;
}

std::uint64_t BitEncoding::code(std::size_t feature, Value v) const {
  const auto& f = schema_[feature];
  if (!f.contains(v)) throw ValidationError("value " + std::to_string(v) + " outside the domain of " + f.name);
  if (f.kind == FeatureKind::ordered) return static_cast<std::uint64_t>(v - f.min);
  return static_cast<std::uint64_t>(std::lower_bound(f.values.begin(), f.values.end(), v) - f.values.begin());
}

std::vector<Literal> BitEncoding::encode_pair(std::span<const Value> config, std::size_t action) const {
  if (config.size() != schema_.arity()) throw ValidationError("configuration arity mismatch");
  if (action >= alphabet_.size()) throw ValidationError("action index out of range");
  std::vector<Literal> out;
  out.reserve(variables_);
  for (std::size_t i = 0; i < config.size(); ++i) {
    const auto c = code(i, config[i]);
    for (std::size_t b = 0; b < widths_[i]; ++b) out.push_back({firsts_[i] + b, ((c >> (widths_[i] - 1 - b)) & 1u) != 0});
  }
  const auto first = first_action_variable();
  for (std::size_t b = 0; b < action_width_; ++b) {
    const bool bit = action_encoding_ == ActionEncoding::one_hot ? b == action
                                                                 : ((action >> (action_width_ - 1 - b)) & 1u) != 0;
    out.push_back({first + b, bit});
  }
  return out;
}

std::uint64_t BitEncoding::encode_bits(std::span<const Value> config, std::size_t action) const {
  if (variables_ > 64) throw CapacityError("more than 64 encoding variables");
  std::uint64_t bits = 0;
  for (const auto& lit : encode_pair(config, action))
    if (lit.positive) bits |= std::uint64_t{1} << lit.variable;
  return bits;
}

std::optional<BitEncoding::Pair> BitEncoding::decode(std::uint64_t bits) const {
  if (variables_ > 64) throw CapacityError("more than 64 encoding variables");
  if (variables_ < 64 && (bits >> variables_) != 0) return std::nullopt;
  auto field = [&](std::size_t first, std::size_t width) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < width; ++b) v = (v << 1) | ((bits >> (first + b)) & 1u);
    return v;
  };
  Pair p;
  for (std::size_t i = 0; i < schema_.arity(); ++i) {
    const auto& f = schema_[i];
    const auto c = field(firsts_[i], widths_[i]);
    if (c >= f.domain_size()) return std::nullopt;
    p.config.push_back(f.kind == FeatureKind::ordered ? f.min + static_cast<Value>(c) : f.values[c]);
  }
  const auto first = first_action_variable();
  if (action_encoding_ == ActionEncoding::one_hot) {
    const auto a = field(first, action_width_);
    if (std::popcount(a) != 1) return std::nullopt;
    p.action = action_width_ - 1 - static_cast<std::size_t>(std::countr_zero(a));
  } else {
    p.action = field(first, action_width_);
    if (p.action >= alphabet_.size()) return std::nullopt;
  }
  return p;
}

std::string BitEncoding::variable_name(std::size_t variable) const {
  if (variable >= variables_) throw ValidationError("variable index out of range");
  const auto first = first_action_variable();
  if (variable >= first) {
    const auto b = variable - first;
    if (action_encoding_ == ActionEncoding::one_hot) return "a:" + alphabet_.name(b);
    return "a[" + std::to_string(action_width_ - 1 - b) + "]";
  }
  const auto i = static_cast<std::size_t>(std::upper_bound(firsts_.begin(), firsts_.end(), variable) - firsts_.begin()) - 1;
  return schema_[i].name + "[" + std::to_string(widths_[i] - 1 - (variable - firsts_[i])) + "]";
}

Bdd build_strategy_bdd(const StrategyTable& table, const BitEncoding& enc, std::span<const std::size_t> order) {
  if (!(table.schema() == enc.schema()) || !(table.alphabet() == enc.alphabet()))
    throw ValidationError("encoding does not match the strategy's schema and alphabet");
  const auto n = enc.variable_count();
  if (n > 64) throw CapacityError("more than 64 encoding variables");
  std::vector<std::size_t> ord(order.begin(), order.end());
  if (ord.empty()) {
    ord.resize(n);
    std::iota(ord.begin(), ord.end(), std::size_t{0});
  }
  Bdd bdd(n, ord);

  // Re-pack each minterm so that level l sits at bit n-1-l: numeric order is
  // then the lexicographic order along the diagram's levels.
  std::vector<std::uint64_t> keys;
  for (std::size_t e = 0; e < table.size(); ++e) {
    const auto cfg = table.configuration(e);
    for (const auto a : table.actions(e).members()) {
      const auto bits = enc.encode_bits(cfg, a);
      std::uint64_t k = 0;
      for (std::size_t l = 0; l < n; ++l)
        if ((bits >> ord[l]) & 1u) k |= std::uint64_t{1} << (n - 1 - l);
      keys.push_back(k);
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  // Recursive partition; depth is bounded by n <= 64.
  auto build = [&](auto&& self, std::size_t level, std::size_t lo, std::size_t hi) -> Bdd::Node {
    if (lo == hi) return Bdd::false_node;
    if (level == n) return Bdd::true_node;
    const auto bit = std::uint64_t{1} << (n - 1 - level);
    const auto mid = static_cast<std::size_t>(
        std::partition_point(keys.begin() + static_cast<std::ptrdiff_t>(lo), keys.begin() + static_cast<std::ptrdiff_t>(hi),
                             [bit](std::uint64_t k) { return (k & bit) == 0; }) -
        keys.begin());
    const auto low = self(self, level + 1, lo, mid);
    const auto high = self(self, level + 1, mid, hi);
    return bdd.make(ord[level], low, high);
  };
  bdd.set_root(build(build, 0, 0, keys.size()));
  bdd.collect_garbage();
  return bdd;
}

OrderExperiment random_order_experiment(const StrategyTable& table, const BitEncoding& enc, std::size_t runs,
                                        std::uint64_t seed, bool sift) {
  if (runs == 0) throw ValidationError("at least one run is required");
  OrderExperiment out;
  out.sizes.assign(runs, 0);
  parallel_for(runs, [&](std::size_t r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    std::vector<std::size_t> order(enc.variable_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    auto bdd = build_strategy_bdd(table, enc, order);
    if (sift) bdd.sift();
    out.sizes[r] = bdd_size(bdd);
  });
  auto sorted = out.sizes;
  std::sort(sorted.begin(), sorted.end());
  out.min = sorted.front();
  out.max = sorted.back();
  out.median = sorted[runs / 2];
  return out;
}

}  // namespace safetree
