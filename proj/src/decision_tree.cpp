#include "safetree/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "safetree/error.hpp"

namespace safetree {

using nlohmann::json;

namespace {

std::string format_threshold(double t) {
  std::ostringstream os;
  os.precision(17);
  os << t;
  return os.str();
}

}  // namespace

std::string to_string(const Predicate& predicate, const FeatureSchema& schema) {
  const auto& name = predicate.feature < schema.arity() ? schema[predicate.feature].name
                                                        : "x" + std::to_string(predicate.feature);
  return name + (predicate.relation == Relation::less_equal ? " <= " : " == ") +
         format_threshold(predicate.threshold);
}

LeafStats::LeafStats(std::uint64_t total, std::vector<std::uint64_t> allowed)
    : total_(total), allowed_(std::move(allowed)) {
  for (auto y : allowed_)
    if (y > total_) throw ValidationError("leaf count y_a exceeds the leaf total");
}

LeafStats LeafStats::from_pairs(std::span<const std::pair<std::uint64_t, std::uint64_t>> pairs) {
  if (pairs.empty()) return {};
  const auto total = pairs.front().first + pairs.front().second;
  std::vector<std::uint64_t> allowed;
  allowed.reserve(pairs.size());
  for (const auto& [n, y] : pairs) {
    if (n + y != total) throw ValidationError("leaf counts (n_a, y_a) must share one total");
    allowed.push_back(y);
  }
  return LeafStats(total, std::move(allowed));
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> LeafStats::pairs() const {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  out.reserve(allowed_.size());
  for (auto y : allowed_) out.emplace_back(total_ - y, y);
  return out;
}

bool LeafStats::unanimous() const {
  return std::all_of(allowed_.begin(), allowed_.end(), [this](auto y) { return y == 0 || y == total_; });
}

LeafStats& LeafStats::operator+=(const LeafStats& other) {
  if (allowed_.empty() && total_ == 0) {
    *this = other;
    return *this;
  }
  if (other.allowed_.size() != allowed_.size()) throw ValidationError("leaf stats over different alphabets");
  total_ += other.total_;
  for (std::size_t a = 0; a < allowed_.size(); ++a) allowed_[a] += other.allowed_[a];
  return *this;
}

DecisionTree::DecisionTree(FeatureSchema schema, Alphabet alphabet, std::vector<TreeNode> nodes)
    : schema_(std::move(schema)), alphabet_(std::move(alphabet)) {
  if (nodes.empty()) throw ValidationError("decision tree without nodes");
  const auto n = static_cast<std::int32_t>(nodes.size());

  // Preorder renumbering with an explicit stack; also rejects cycles and sharing.
  std::vector<std::int32_t> order;
  std::vector<char> seen(nodes.size(), 0);
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    if (id < 0 || id >= n) throw ValidationError("child index out of range");
    if (seen[id]) throw ValidationError("decision tree nodes must form a tree");
    seen[id] = 1;
    order.push_back(id);
    const auto& nd = nodes[id];
    if ((nd.left < 0) != (nd.right < 0)) throw ValidationError("inner node with a single child");
    if (!nd.is_leaf()) {
      const auto& p = nd.predicate;
      if (p.feature >= schema_.arity()) throw ValidationError("predicate on unknown feature");
      const bool ordered = schema_[p.feature].kind == FeatureKind::ordered;
      if (ordered != (p.relation == Relation::less_equal))
        throw ValidationError("'<=' requires an ordered feature and '==' a categorical one");
      if (!std::isfinite(p.threshold)) throw ValidationError("non-finite threshold");
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    }
  }

  std::vector<std::int32_t> remap(nodes.size(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) remap[order[i]] = static_cast<std::int32_t>(i);
  nodes_.reserve(order.size());
  for (auto old : order) {
    TreeNode nd = std::move(nodes[old]);
    if (!nd.is_leaf()) {
      nd.left = remap[nd.left];
      nd.right = remap[nd.right];
    } else {
      if (nd.stats.action_count() != alphabet_.size())
        throw ValidationError("leaf stats do not match the action alphabet");
      if (nd.stats.total() == 0) throw ValidationError("empty leaf");
    }
    nodes_.push_back(std::move(nd));
  }
  // Children follow their parent in preorder, so a reverse sweep sees children first.
  for (auto i = nodes_.size(); i-- > 0;) {
    auto& nd = nodes_[i];
    if (!nd.is_leaf()) nd.stats = nodes_[nd.left].stats + nodes_[nd.right].stats;
  }
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](auto& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) d[nodes_[i].left] = d[nodes_[i].right] = d[i] + 1;
  }
  return best;
}

std::size_t DecisionTree::leaf_of(std::span<const double> config) const {
  if (config.size() != schema_.arity()) throw ValidationError("configuration arity does not match the tree");
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto& nd = nodes_[id];
    id = static_cast<std::size_t>(nd.predicate.holds(config[nd.predicate.feature]) ? nd.left : nd.right);
  }
  return id;
}

std::size_t DecisionTree::leaf_of(std::span<const Value> config) const {
  if (config.size() != schema_.arity()) throw ValidationError("configuration arity does not match the tree");
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto& nd = nodes_[id];
    const auto v = static_cast<double>(config[nd.predicate.feature]);
    id = static_cast<std::size_t>(nd.predicate.holds(v) ? nd.left : nd.right);
  }
  return id;
}

json DecisionTree::to_json() const {
  json j;
  j["features"] = schema_to_json(schema_);
  j["actions"] = alphabet_.names();
  json nodes = json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& nd = nodes_[i];
    json n;
    n["id"] = i;
    if (nd.is_leaf()) {
      json counts = json::array();
      for (const auto& [no, yes] : nd.stats.pairs()) counts.push_back({no, yes});
      n["leaf"] = {{"counts", counts}};
    } else {
      n["predicate"] = {{"feature", nd.predicate.feature},
                        {"rel", nd.predicate.relation == Relation::less_equal ? "<=" : "=="},
                        {"threshold", nd.predicate.threshold}};
      n["left"] = nd.left;
      n["right"] = nd.right;
    }
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

DecisionTree DecisionTree::from_json(const json& j) {
  try {
    auto schema = schema_from_json(j.at("features"));
    Alphabet alphabet(j.at("actions").get<std::vector<std::string>>());
    const auto& arr = j.at("nodes");
    std::vector<TreeNode> nodes(arr.size());
    for (const auto& n : arr) {
      const auto id = n.at("id").get<std::size_t>();
      if (id >= nodes.size()) throw ValidationError("node id out of range");
      auto& nd = nodes[id];
      if (n.contains("leaf")) {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
        for (const auto& c : n.at("leaf").at("counts"))
          pairs.emplace_back(c.at(0).get<std::uint64_t>(), c.at(1).get<std::uint64_t>());
        nd.stats = LeafStats::from_pairs(pairs);
      } else {
        const auto& p = n.at("predicate");
        nd.predicate.feature = p.at("feature").get<std::size_t>();
        const auto rel = p.at("rel").get<std::string>();
        if (rel == "<=") {
          nd.predicate.relation = Relation::less_equal;
        } else if (rel == "==" || rel == "=") {
          nd.predicate.relation = Relation::equal;
        } else {
          throw ValidationError("unknown relation '" + rel + "'");
        }
        nd.predicate.threshold = p.at("threshold").get<double>();
        nd.left = n.at("left").get<std::int32_t>();
        nd.right = n.at("right").get<std::int32_t>();
      }
    }
    return DecisionTree(std::move(schema), std::move(alphabet), std::move(nodes));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed tree JSON: ") + e.what());
  }
}

std::string DecisionTree::canonical() const { return to_json().dump(); }

bool DecisionTree::operator==(const DecisionTree& other) const {
  if (schema_ != other.schema_ || alphabet_ != other.alphabet_ || nodes_.size() != other.nodes_.size())
    return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = other.nodes_[i];
    if (a.left != b.left || a.right != b.right || a.stats != b.stats) return false;
    if (!a.is_leaf() && a.predicate != b.predicate) return false;
  }
  return true;
}

DecisionTree load_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return DecisionTree::from_json(j);
}

void save_tree(const DecisionTree& tree, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << tree.to_json().dump(1) << '\n';
  out.flush();
  if (!out) throw Error("I/O failure writing " + path.string());
}

}  // namespace safetree
