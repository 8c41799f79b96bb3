#include "safetree/strategy.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "safetree/error.hpp"

namespace safetree {

using nlohmann::json;

Feature Feature::ordered(std::string name, Value min, Value max) {
  Feature f;
  f.name = std::move(name);
  f.kind = FeatureKind::ordered;
  f.min = min;
  f.max = max;
  return f;
}

Feature Feature::categorical(std::string name, std::vector<Value> values) {
  Feature f;
  f.name = std::move(name);
  f.kind = FeatureKind::categorical;
  std::sort(values.begin(), values.end());
  f.values = std::move(values);
  return f;
}

bool Feature::contains(Value v) const {
  if (kind == FeatureKind::ordered) return v >= min && v <= max;
  return std::binary_search(values.begin(), values.end(), v);
}

std::size_t Feature::domain_size() const {
  if (kind == FeatureKind::ordered) return static_cast<std::size_t>(max - min) + 1;
  return values.size();
}

Value Feature::lowest() const { return kind == FeatureKind::ordered ? min : values.front(); }
Value Feature::highest() const { return kind == FeatureKind::ordered ? max : values.back(); }

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
  std::set<std::string_view> names;
  for (const auto& f : features_) {
    if (f.name.empty()) throw ValidationError("feature with empty name");
    if (!names.insert(f.name).second) throw ValidationError("duplicate feature name '" + f.name + "'");
    if (f.kind == FeatureKind::ordered) {
      if (f.min > f.max) throw ValidationError("feature '" + f.name + "' has min > max");
    } else {
      if (f.values.empty()) throw ValidationError("categorical feature '" + f.name + "' has no values");
      if (!std::is_sorted(f.values.begin(), f.values.end()) ||
          std::adjacent_find(f.values.begin(), f.values.end()) != f.values.end())
        throw ValidationError("categorical feature '" + f.name + "' values must be sorted and distinct");
    }
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

bool FeatureSchema::conforms(std::span<const Value> config) const {
  if (config.size() != features_.size()) return false;
  for (std::size_t i = 0; i < config.size(); ++i)
    if (!features_[i].contains(config[i])) return false;
  return true;
}

std::vector<std::size_t> ActionSet::members() const {
  std::vector<std::size_t> out;
  for (std::uint32_t b = bits_; b != 0; b &= b - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(b)));
  return out;
}

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ValidationError("empty action alphabet");
  if (names_.size() > ActionSet::kMaxActions)
    throw ValidationError("action alphabet larger than " + std::to_string(ActionSet::kMaxActions));
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("empty action name");
    if (!seen.insert(n).second) throw ValidationError("duplicate action '" + n + "'");
  }
}

std::optional<std::size_t> Alphabet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::string Alphabet::format(ActionSet set) const {
  std::string out = "{";
  bool first = true;
  for (auto a : set.members()) {
    if (!first) out += ",";
    out += a < names_.size() ? names_[a] : "#" + std::to_string(a);
    first = false;
  }
  return out + "}";
}

StrategyTable::Builder::Builder(FeatureSchema schema, Alphabet alphabet)
    : schema_(std::move(schema)), alphabet_(std::move(alphabet)) {}

StrategyTable::Builder& StrategyTable::Builder::add(std::span<const Value> config, ActionSet actions) {
  if (config.size() != schema_.arity())
    throw ValidationError("configuration arity " + std::to_string(config.size()) + " != schema arity " +
                          std::to_string(schema_.arity()));
  values_.insert(values_.end(), config.begin(), config.end());
  actions_.push_back(actions);
  return *this;
}

StrategyTable::Builder& StrategyTable::Builder::add(std::initializer_list<Value> config, ActionSet actions) {
  return add(std::span<const Value>(config.begin(), config.size()), actions);
}

void StrategyTable::Builder::reserve(std::size_t entries) {
  values_.reserve(entries * schema_.arity());
  actions_.reserve(entries);
}

StrategyTable StrategyTable::Builder::build() && {
  return StrategyTable(std::move(schema_), std::move(alphabet_), std::move(values_), std::move(actions_));
}

StrategyTable::StrategyTable(FeatureSchema schema, Alphabet alphabet, std::vector<Value> values,
                             std::vector<ActionSet> actions)
    : schema_(std::move(schema)),
      alphabet_(std::move(alphabet)),
      values_(std::move(values)),
      actions_(std::move(actions)) {
  const auto d = schema_.arity();
  if (d == 0) throw ValidationError("schema without features");
  if (values_.size() != actions_.size() * d) throw ValidationError("value count does not match entry count");
  if (actions_.size() > std::numeric_limits<std::uint32_t>::max()) throw CapacityError("too many entries");
  const ActionSet universe = alphabet_.all();
  for (std::size_t e = 0; e < actions_.size(); ++e) {
    if (actions_[e].empty()) throw ValidationError("entry " + std::to_string(e) + " has an empty action set");
    if (!actions_[e].subset_of(universe))
      throw ValidationError("entry " + std::to_string(e) + " references an action outside the alphabet");
    if (!schema_.conforms(configuration(e)))
      throw ValidationError("entry " + std::to_string(e) + " lies outside the feature domains");
  }
  sorted_.resize(actions_.size());
  std::iota(sorted_.begin(), sorted_.end(), 0u);
  std::sort(sorted_.begin(), sorted_.end(), [this](auto a, auto b) { return less(a, b); });
  for (std::size_t i = 1; i < sorted_.size(); ++i) {
    if (!less(sorted_[i - 1], sorted_[i])) {
      std::string cfg;
      for (auto v : configuration(sorted_[i])) cfg += (cfg.empty() ? "" : ",") + std::to_string(v);
      throw ValidationError("duplicate configuration (" + cfg + ")");
    }
  }
}

bool StrategyTable::less(std::size_t a, std::size_t b) const {
  auto ca = configuration(a);
  auto cb = configuration(b);
  return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
}

int StrategyTable::compare(std::size_t entry, std::span<const Value> config) const {
  auto c = configuration(entry);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] < config[i]) return -1;
    if (c[i] > config[i]) return 1;
  }
  return 0;
}

std::optional<std::size_t> StrategyTable::find_entry(std::span<const Value> config) const {
  if (config.size() != schema_.arity()) return std::nullopt;
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), config,
                             [this](std::uint32_t e, std::span<const Value> c) { return compare(e, c) < 0; });
  if (it == sorted_.end() || compare(*it, config) != 0) return std::nullopt;
  return *it;
}

std::optional<ActionSet> StrategyTable::find(std::span<const Value> config) const {
  auto e = find_entry(config);
  if (!e) return std::nullopt;
  return actions_[*e];
}

bool StrategyTable::operator==(const StrategyTable& other) const {
  if (schema_ != other.schema_ || alphabet_ != other.alphabet_ || size() != other.size()) return false;
  for (std::size_t i = 0; i < sorted_.size(); ++i) {
    auto a = configuration(sorted_[i]);
    auto b = other.configuration(other.sorted_[i]);
    if (!std::equal(a.begin(), a.end(), b.begin())) return false;
    if (actions_[sorted_[i]] != other.actions_[other.sorted_[i]]) return false;
  }
  return true;
}

json schema_to_json(const FeatureSchema& schema) {
  json features = json::array();
  for (const auto& f : schema.features()) {
    json j;
    j["name"] = f.name;
    if (f.kind == FeatureKind::ordered) {
      j["kind"] = "ordered";
      j["min"] = f.min;
      j["max"] = f.max;
    } else {
      j["kind"] = "categorical";
      j["values"] = f.values;
    }
    features.push_back(std::move(j));
  }
  return features;
}

FeatureSchema schema_from_json(const json& features) {
  if (!features.is_array()) throw ValidationError("\"features\" must be an array");
  std::vector<Feature> out;
  for (const auto& j : features) {
    const auto name = j.at("name").get<std::string>();
    const auto kind = j.value("kind", std::string("ordered"));
    if (kind == "ordered") {
      out.push_back(Feature::ordered(name, j.at("min").get<Value>(), j.at("max").get<Value>()));
    } else if (kind == "categorical") {
      out.push_back(Feature::categorical(name, j.at("values").get<std::vector<Value>>()));
    } else {
      throw ValidationError("unknown feature kind '" + kind + "'");
    }
  }
  return FeatureSchema(std::move(out));
}

StrategyTable read_strategy(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;

  std::optional<FeatureSchema> schema;
  std::optional<Alphabet> alphabet;
  while (!schema && std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto header = json::parse(line);
      schema = schema_from_json(header.at("features"));
      alphabet = Alphabet(header.at("actions").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
      throw ParseError(lineno, std::string("bad header: ") + e.what());
    } catch (const ValidationError& e) {
      throw ParseError(lineno, std::string("bad header: ") + e.what());
    }
  }
  if (!schema) throw ParseError(lineno, "missing header");

  const auto d = schema->arity();
  std::vector<Value> values;
  std::vector<ActionSet> actions;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ActionSet set;
    try {
      const auto entry = json::parse(line);
      const auto& c = entry.at("c");
      if (!c.is_array() || c.size() != d)
        throw ParseError(lineno, "configuration must be an array of " + std::to_string(d) + " integers");
      for (const auto& v : c) {
        if (!v.is_number_integer()) throw ParseError(lineno, "configuration values must be integers");
        values.push_back(v.get<Value>());
      }
      for (const auto& a : entry.at("a")) {
        const auto name = a.get<std::string>();
        auto idx = alphabet->index_of(name);
        if (!idx) throw ParseError(lineno, "unknown action '" + name + "'");
        set.insert(*idx);
      }
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    if (set.empty()) throw ParseError(lineno, "empty action set");
    if (!schema->conforms(std::span<const Value>(values).last(d)))
      throw ParseError(lineno, "configuration outside the feature domains");
    actions.push_back(set);
  }
  if (actions.empty()) throw ValidationError("empty strategy");

  return StrategyTable(std::move(*schema), std::move(*alphabet), std::move(values), std::move(actions));
}

StrategyTable load_strategy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_strategy(in);
}

void write_strategy(const StrategyTable& table, std::ostream& out) {
  json header;
  header["features"] = schema_to_json(table.schema());
  header["actions"] = table.alphabet().names();
  out << header.dump() << '\n';
  std::string line;
  for (std::size_t e = 0; e < table.size(); ++e) {
    line = "{\"c\":[";
    bool first = true;
    for (auto v : table.configuration(e)) {
      if (!first) line += ',';
      line += std::to_string(v);
      first = false;
    }
    line += "],\"a\":[";
    first = true;
    for (auto a : table.actions(e).members()) {
      if (!first) line += ',';
      line += json(table.alphabet().name(a)).dump();
      first = false;
    }
    line += "]}\n";
    out << line;
  }
}

void save_strategy(const StrategyTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_strategy(table, out);
  out.flush();
  if (!out) throw Error("I/O failure writing " + path.string());
}

bool is_sub_strategy(const StrategyTable& table, const StrategyTable& sub) {
  if (table.schema() != sub.schema()) throw ValidationError("schema mismatch");
  if (table.alphabet() != sub.alphabet()) throw ValidationError("action alphabet mismatch");
  for (std::size_t e = 0; e < sub.size(); ++e) {
    const auto allowed = table.find(sub.configuration(e));
    if (!allowed) return false;
    const auto chosen = sub.actions(e);
    if (chosen.empty() || !chosen.subset_of(*allowed)) return false;
  }
  return true;
}

}  // namespace safetree
