#pragma once

// Bit-blasting of configuration-action pairs for the BDD baseline.
//
// Variables are numbered feature by feature, most significant bit first,
// followed by the action bits. Ordered features store value - min, categorical
// features the index of the value; negative domains are therefore shifted.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safetree/bdd.hpp"
#include "safetree/strategy.hpp"

namespace safetree {

enum class ActionEncoding { one_hot, binary };

struct Literal {
  std::size_t variable;
  bool positive;
  bool operator==(const Literal&) const = default;
};

class BitEncoding {
 public:
  BitEncoding(FeatureSchema schema, Alphabet alphabet, ActionEncoding actions = ActionEncoding::one_hot);

  const FeatureSchema& schema() const noexcept { return schema_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }
  ActionEncoding action_encoding() const noexcept { return action_encoding_; }

  std::size_t variable_count() const noexcept { return variables_; }
  std::size_t width(std::size_t feature) const { return widths_.at(feature); }
  std::size_t first_variable(std::size_t feature) const { return firsts_.at(feature); }
  std::size_t action_width() const noexcept { return action_width_; }
  std::size_t first_action_variable() const noexcept { return variables_ - action_width_; }

  // Unsigned code of a feature value; throws ValidationError outside the domain.
  std::uint64_t code(std::size_t feature, Value v) const;

  // Full minterm over all variables, in variable order.
  std::vector<Literal> encode_pair(std::span<const Value> config, std::size_t action) const;
  // Same minterm as a bit vector (bit i = variable i); at most 64 variables.
  std::uint64_t encode_bits(std::span<const Value> config, std::size_t action) const;

  struct Pair {
    std::vector<Value> config;
    std::size_t action;
  };
  // Inverse of encode_bits; none for bit patterns that encode no valid pair.
  std::optional<Pair> decode(std::uint64_t bits) const;

  // "distance[3]" for bit 3 (weight 8) of distance; "a:dec" or "a[1]" for actions.
  std::string variable_name(std::size_t variable) const;

 private:
  FeatureSchema schema_;
  Alphabet alphabet_;
  ActionEncoding action_encoding_;
  std::vector<std::size_t> widths_, firsts_;
  std::size_t action_width_ = 0;
  std::size_t variables_ = 0;
};

// BDD with B(enc(γ, a)) = true iff a ∈ table(γ); every other bit pattern,
// valid or not, maps to false. order[level] = variable (identity if empty).
Bdd build_strategy_bdd(const StrategyTable& table, const BitEncoding& enc,
                       std::span<const std::size_t> order = {});

struct OrderExperiment {
  std::vector<std::size_t> sizes;  // bdd_size after sifting, one per run
  std::size_t min = 0, median = 0, max = 0;
};

// R builds from uniformly random initial orders (run r uses derive_seed(seed, r)),
// each followed by sifting. median is the upper median, sorted[R / 2].
OrderExperiment random_order_experiment(const StrategyTable& table, const BitEncoding& enc,
                                        std::size_t runs, std::uint64_t seed, bool sift = true);

}  // namespace safetree
