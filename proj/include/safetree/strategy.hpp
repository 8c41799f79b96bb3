#pragma once

// Configuration space, action alphabet and permissive strategy tables.
//
// A strategy table maps integer configurations to non-empty sets of allowed
// actions. Controller and environment modes are ordinary categorical features
// of the configuration vector, so the learner and the tables share one data
// model.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace safetree {

using Value = std::int64_t;

enum class FeatureKind { ordered, categorical };

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::ordered;
  Value min = 0;              // ordered features only
  Value max = 0;              // ordered features only
  std::vector<Value> values;  // categorical features only, ascending

  static Feature ordered(std::string name, Value min, Value max);
  static Feature categorical(std::string name, std::vector<Value> values);

  bool contains(Value v) const;
  std::size_t domain_size() const;
  // Lowest and highest domain value.
  Value lowest() const;
  Value highest() const;

  bool operator==(const Feature&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Feature> features);

  std::size_t arity() const noexcept { return features_.size(); }
  const Feature& operator[](std::size_t i) const { return features_[i]; }
  std::span<const Feature> features() const noexcept { return features_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  // True iff `config` has the right arity and every value lies in its domain.
  bool conforms(std::span<const Value> config) const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<Feature> features_;
};

// Subset of an alphabet of at most 32 actions, one bit per action index.
class ActionSet {
 public:
  static constexpr std::size_t kMaxActions = 32;

  constexpr ActionSet() = default;
  constexpr explicit ActionSet(std::uint32_t bits) : bits_(bits) {}

  static constexpr ActionSet single(std::size_t action) { return ActionSet(1u << action); }
  static constexpr ActionSet all(std::size_t count) {
    return ActionSet(count >= 32 ? ~0u : (1u << count) - 1u);
  }

  constexpr bool contains(std::size_t action) const { return (bits_ >> action) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool subset_of(ActionSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr std::uint32_t bits() const { return bits_; }

  // Lowest action index; the set must be non-empty.
  constexpr std::size_t first() const { return static_cast<std::size_t>(std::countr_zero(bits_)); }

  constexpr void insert(std::size_t action) { bits_ |= 1u << action; }
  constexpr void erase(std::size_t action) { bits_ &= ~(1u << action); }

  friend constexpr ActionSet operator&(ActionSet a, ActionSet b) { return ActionSet(a.bits_ & b.bits_); }
  friend constexpr ActionSet operator|(ActionSet a, ActionSet b) { return ActionSet(a.bits_ | b.bits_); }
  constexpr bool operator==(const ActionSet&) const = default;

  std::vector<std::size_t> members() const;

 private:
  std::uint32_t bits_ = 0;
};

// Ordered action names; the order defines the lexicographic action order.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t action) const { return names_.at(action); }
  std::span<const std::string> names() const noexcept { return names_; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  ActionSet all() const { return ActionSet::all(names_.size()); }
  std::string format(ActionSet set) const;

  bool operator==(const Alphabet&) const = default;

 private:
  std::vector<std::string> names_;
};

// Immutable finite map from integer configurations to allowed-action sets.
class StrategyTable {
 public:
  class Builder {
   public:
    Builder(FeatureSchema schema, Alphabet alphabet);
    Builder& add(std::span<const Value> config, ActionSet actions);
    Builder& add(std::initializer_list<Value> config, ActionSet actions);
    void reserve(std::size_t entries);
    StrategyTable build() &&;

   private:
    FeatureSchema schema_;
    Alphabet alphabet_;
    std::vector<Value> values_;
    std::vector<ActionSet> actions_;
  };

  StrategyTable() = default;
  // Validates: conforming configurations, distinct configurations, non-empty action sets.
  StrategyTable(FeatureSchema schema, Alphabet alphabet, std::vector<Value> values,
                std::vector<ActionSet> actions);

  std::size_t size() const noexcept { return actions_.size(); }
  bool empty() const noexcept { return actions_.empty(); }
  const FeatureSchema& schema() const noexcept { return schema_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }

  std::span<const Value> configuration(std::size_t entry) const {
    return {values_.data() + entry * schema_.arity(), schema_.arity()};
  }
  ActionSet actions(std::size_t entry) const { return actions_[entry]; }
  std::span<const ActionSet> all_actions() const noexcept { return actions_; }

  std::optional<std::size_t> find_entry(std::span<const Value> config) const;
  std::optional<ActionSet> find(std::span<const Value> config) const;

  // Same schema, alphabet and mapping; entry order is irrelevant.
  bool operator==(const StrategyTable& other) const;

 private:
  bool less(std::size_t a, std::size_t b) const;
  int compare(std::size_t entry, std::span<const Value> config) const;

  FeatureSchema schema_;
  Alphabet alphabet_;
  std::vector<Value> values_;       // row-major, arity values per entry
  std::vector<ActionSet> actions_;
  std::vector<std::uint32_t> sorted_;  // entry ids in lexicographic configuration order
};

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& features);

StrategyTable read_strategy(std::istream& in);
StrategyTable load_strategy(const std::filesystem::path& path);
void write_strategy(const StrategyTable& table, std::ostream& out);
void save_strategy(const StrategyTable& table, const std::filesystem::path& path);

// True iff every configuration of `sub` is in `table` and maps to a non-empty
// subset of table's actions there. Throws ValidationError on schema or
// alphabet mismatch.
bool is_sub_strategy(const StrategyTable& table, const StrategyTable& sub);

}  // namespace safetree
