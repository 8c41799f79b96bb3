#include "safetree/learner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "safetree/error.hpp"

namespace safetree {

namespace {

double xlog2x(std::uint64_t x) {
  return x == 0 ? 0.0 : static_cast<double>(x) * std::log2(static_cast<double>(x));
}

bool has_positive_entropy(const LeafStats& s) { return !s.unanimous(); }

// Split search over one node. Scores are n * H in bits, computed from a
// precomputed x*log2(x) table so that equal count vectors give equal scores.
class SplitSearch {
 public:
  explicit SplitSearch(const StrategyTable& table)
      : table_(table), actions_(table.alphabet().size()), xlogx_(table.size() + 1) {
    for (std::size_t i = 0; i < xlogx_.size(); ++i) xlogx_[i] = xlog2x(i);
  }

  struct Best {
    Predicate predicate;
    double score = 0.0;
  };

  std::optional<Best> find(std::span<const std::uint32_t> entries) {
    std::optional<Best> best;
    for (std::size_t f = 0; f < table_.schema().arity(); ++f) {
      build_groups(f, entries);
      if (group_values_.size() < 2) continue;
      if (table_.schema()[f].kind == FeatureKind::ordered) {
        scan_ordered(f, entries.size(), best);
      } else {
        scan_categorical(f, entries.size(), best);
      }
    }
    return best;
  }

 private:
  double weighted_entropy(std::uint64_t n, const std::uint64_t* yes) const {
    double s = 0.0;
    for (std::size_t a = 0; a < actions_; ++a) s += xlogx_[n] - xlogx_[yes[a]] - xlogx_[n - yes[a]];
    return s;
  }

  void consider(std::optional<Best>& best, std::size_t feature, Relation rel, double threshold, double score) {
    if (best) {
      const double eps = 1e-10 * std::max(1.0, std::abs(best->score));
      if (!(score < best->score - eps)) return;
    }
    best = Best{Predicate{feature, rel, threshold}, score};
  }

  // Groups the node's entries by value of feature f in ascending order.
  void build_groups(std::size_t f, std::span<const std::uint32_t> entries) {
    const auto& feature = table_.schema()[f];
    const auto d = table_.schema().arity();
    group_values_.clear();
    group_counts_.clear();
    group_yes_.clear();

    const auto span = static_cast<std::uint64_t>(feature.highest() - feature.lowest());
    const bool counting = feature.kind == FeatureKind::categorical || span <= 2 * entries.size() + 256;
    if (counting) {
      const auto slots = feature.domain_size();
      hist_counts_.assign(slots, 0);
      hist_yes_.assign(slots * actions_, 0);
      const auto* values = &table_.configuration(0)[0];
      for (auto e : entries) {
        const auto v = values[static_cast<std::size_t>(e) * d + f];
        const auto slot = slot_of(feature, v);
        ++hist_counts_[slot];
        auto bits = table_.actions(e).bits();
        for (; bits != 0; bits &= bits - 1) ++hist_yes_[slot * actions_ + std::countr_zero(bits)];
      }
      for (std::size_t s = 0; s < slots; ++s) {
        if (hist_counts_[s] == 0) continue;
        group_values_.push_back(feature.kind == FeatureKind::ordered ? feature.min + static_cast<Value>(s)
                                                                     : feature.values[s]);
        group_counts_.push_back(hist_counts_[s]);
        group_yes_.insert(group_yes_.end(), hist_yes_.begin() + static_cast<std::ptrdiff_t>(s * actions_),
                          hist_yes_.begin() + static_cast<std::ptrdiff_t>((s + 1) * actions_));
      }
      return;
    }

    sorted_.clear();
    for (auto e : entries) sorted_.emplace_back(table_.configuration(e)[f], e);
    std::sort(sorted_.begin(), sorted_.end());
    for (std::size_t i = 0; i < sorted_.size(); ++i) {
      if (i == 0 || sorted_[i].first != sorted_[i - 1].first) {
        group_values_.push_back(sorted_[i].first);
        group_counts_.push_back(0);
        group_yes_.resize(group_yes_.size() + actions_, 0);
      }
      ++group_counts_.back();
      auto* yes = group_yes_.data() + group_yes_.size() - actions_;
      for (auto bits = table_.actions(sorted_[i].second).bits(); bits != 0; bits &= bits - 1)
        ++yes[std::countr_zero(bits)];
    }
  }

  static std::size_t slot_of(const Feature& feature, Value v) {
    if (feature.kind == FeatureKind::ordered) return static_cast<std::size_t>(v - feature.min);
    return static_cast<std::size_t>(std::lower_bound(feature.values.begin(), feature.values.end(), v) -
                                    feature.values.begin());
  }

  void totals(std::size_t n) {
    total_yes_.assign(actions_, 0);
    for (std::size_t g = 0; g < group_counts_.size(); ++g)
      for (std::size_t a = 0; a < actions_; ++a) total_yes_[a] += group_yes_[g * actions_ + a];
    total_n_ = n;
  }

  void scan_ordered(std::size_t f, std::size_t n, std::optional<Best>& best) {
    totals(n);
    left_yes_.assign(actions_, 0);
    right_yes_.resize(actions_);
    std::uint64_t left_n = 0;
    for (std::size_t g = 0; g + 1 < group_values_.size(); ++g) {
      left_n += group_counts_[g];
      for (std::size_t a = 0; a < actions_; ++a) {
        left_yes_[a] += group_yes_[g * actions_ + a];
        right_yes_[a] = total_yes_[a] - left_yes_[a];
      }
      const double score =
          weighted_entropy(left_n, left_yes_.data()) + weighted_entropy(total_n_ - left_n, right_yes_.data());
      const double threshold =
          (static_cast<double>(group_values_[g]) + static_cast<double>(group_values_[g + 1])) / 2.0;
      consider(best, f, Relation::less_equal, threshold, score);
    }
  }

  void scan_categorical(std::size_t f, std::size_t n, std::optional<Best>& best) {
    totals(n);
    right_yes_.resize(actions_);
    for (std::size_t g = 0; g < group_values_.size(); ++g) {
      const auto* yes = group_yes_.data() + g * actions_;
      for (std::size_t a = 0; a < actions_; ++a) right_yes_[a] = total_yes_[a] - yes[a];
      const double score =
          weighted_entropy(group_counts_[g], yes) + weighted_entropy(total_n_ - group_counts_[g], right_yes_.data());
      consider(best, f, Relation::equal, static_cast<double>(group_values_[g]), score);
    }
  }

  const StrategyTable& table_;
  std::size_t actions_;
  std::vector<double> xlogx_;

  std::vector<Value> group_values_;
  std::vector<std::uint64_t> group_counts_;
  std::vector<std::uint64_t> group_yes_;
  std::vector<std::uint64_t> hist_counts_;
  std::vector<std::uint64_t> hist_yes_;
  std::vector<std::pair<Value, std::uint32_t>> sorted_;
  std::vector<std::uint64_t> total_yes_, left_yes_, right_yes_;
  std::uint64_t total_n_ = 0;
};

bool satisfies(const StrategyTable& table, std::uint32_t entry, const Predicate& p) {
  return p.holds(static_cast<double>(table.configuration(entry)[p.feature]));
}

}  // namespace

double multilabel_entropy(const LeafStats& stats) {
  if (stats.total() == 0) throw ValidationError("entropy of an empty node");
  const double n = static_cast<double>(stats.total());
  double h = 0.0;
  for (std::size_t a = 0; a < stats.action_count(); ++a) {
    const double p = static_cast<double>(stats.allowed(a)) / n;
    if (p > 0.0 && p < 1.0) h -= p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p);
  }
  return h;
}

LeafStats stats_of(const StrategyTable& table, std::span<const std::uint32_t> entries) {
  std::vector<std::uint64_t> yes(table.alphabet().size(), 0);
  for (auto e : entries)
    for (auto bits = table.actions(e).bits(); bits != 0; bits &= bits - 1) ++yes[std::countr_zero(bits)];
  return LeafStats(entries.size(), std::move(yes));
}

std::optional<Split> choose_split(const StrategyTable& table, std::span<const std::uint32_t> entries) {
  if (entries.size() < 2) throw ValidationError("choose_split needs at least two configurations");
  if (!has_positive_entropy(stats_of(table, entries))) throw ValidationError("choose_split on a zero-entropy node");
  SplitSearch search(table);
  auto best = search.find(entries);
  if (!best) return std::nullopt;
  Split split;
  split.predicate = best->predicate;
  split.score = best->score;
  for (auto e : entries) (satisfies(table, e, split.predicate) ? split.left : split.right).push_back(e);
  return split;
}

DecisionTree learn(const StrategyTable& table, std::size_t min_split) {
  if (min_split < 2) throw ValidationError("minimum split size must be at least 2");
  if (table.empty()) throw ValidationError("cannot learn from an empty strategy");

  std::vector<std::uint32_t> entries(table.size());
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = static_cast<std::uint32_t>(i);

  struct Pending {
    std::size_t begin, end;
    std::int32_t parent;
    bool left;
  };
  std::vector<Pending> stack{{0, entries.size(), -1, false}};
  std::vector<TreeNode> nodes;
  std::vector<std::int32_t> parents;
  SplitSearch search(table);

  auto path_of = [&](std::int32_t id) {
    std::vector<std::string> parts;
    for (auto child = id, p = parents[id]; p >= 0; child = p, p = parents[p]) {
      auto text = to_string(nodes[p].predicate, table.schema());
      parts.push_back(nodes[p].left == child ? text : "!(" + text + ")");
    }
    std::string out;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) out += (out.empty() ? "" : " && ") + *it;
    return out.empty() ? std::string("root") : out;
  };

  while (!stack.empty()) {
    const auto job = stack.back();
    stack.pop_back();
    const auto id = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    parents.push_back(job.parent);
    if (job.parent >= 0) (job.left ? nodes[job.parent].left : nodes[job.parent].right) = id;

    std::span<std::uint32_t> mine(entries.data() + job.begin, job.end - job.begin);
    nodes[id].stats = stats_of(table, mine);

    std::optional<SplitSearch::Best> best;
    if (mine.size() >= min_split && has_positive_entropy(nodes[id].stats)) {
      best = search.find(mine);
      if (!best) throw ValidationError("corrupt input: identical configurations with different actions");
    }
    if (!best) {
      const auto& s = nodes[id].stats;
      bool pure = false;
      for (std::size_t a = 0; a < s.action_count() && !pure; ++a) pure = s.disallowed(a) == 0;
      if (!pure)
        throw NoPureActionError(static_cast<std::size_t>(id), mine.size(),
                                "leaf " + std::to_string(id) + " (" + std::to_string(mine.size()) +
                                    " configurations, path: " + path_of(id) + ") has no pure action; " +
                                    "minimum split size " + std::to_string(min_split) + " is too large");
      continue;
    }

    nodes[id].predicate = best->predicate;
    const auto mid = std::partition(mine.begin(), mine.end(),
                                    [&](std::uint32_t e) { return satisfies(table, e, best->predicate); });
    const auto split_at = job.begin + static_cast<std::size_t>(mid - mine.begin());
    // Right first so the left subtree is numbered first (preorder).
    stack.push_back({split_at, job.end, id, false});
    stack.push_back({job.begin, split_at, id, true});
  }
  return DecisionTree(table.schema(), table.alphabet(), std::move(nodes));
}

}  // namespace safetree
