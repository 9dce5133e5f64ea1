#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/oracle.hpp"

namespace kcsim {

enum class NodeStatus { kAbsent, kAlive, kDead };

inline const char* status_name(NodeStatus s) {
  switch (s) {
    case NodeStatus::kAbsent: return "absent";
    case NodeStatus::kAlive: return "alive";
    case NodeStatus::kDead: return "dead";
  }
  return "?";
}

struct TreeAction {
  enum class Kind { kExtend, kInjure };
  Stage stage = 0;
  Kind kind = Kind::kExtend;
  std::size_t level = 0;   // n for kExtend, i for kInjure
  BitString suffix;        // γ for kInjure
  friend bool operator==(const TreeAction&, const TreeAction&) = default;
};

/// The partially built tree of the single-function construction.
///
/// Every living path agrees with every other except at the coding locations
/// (bit index n_j of each set branching level), so the living part is stored
/// as a template leaf (all coding bits 0) plus the levels n_0 < ... < n_{k-1}.
/// Each action appends a snapshot; a node is in T iff it was alive in some
/// snapshot, and dead iff it is in T but not alive now. Dead nodes therefore
/// stay recorded forever without being materialized.
class ConstructionTree {
 public:
  ConstructionTree() { snapshots_.push_back({template_, levels_}); }

  const BitString& template_leaf() const { return template_; }
  std::size_t leaf_length() const { return template_.size(); }
  const std::vector<std::size_t>& levels() const { return levels_; }
  std::size_t level_count() const { return levels_.size(); }
  std::size_t max_length_ever() const { return max_length_; }
  const std::vector<TreeAction>& history() const { return history_; }
  std::uint64_t version() const { return history_.size(); }

  bool alive(const BitString& x) const { return alive_in(template_, levels_, x); }

  NodeStatus status(const BitString& x) const {
    if (alive(x)) return NodeStatus::kAlive;
    for (const auto& s : snapshots_) {
      if (alive_in(s.leaf, s.levels, x)) return NodeStatus::kDead;
    }
    return NodeStatus::kAbsent;
  }

  /// Living nodes of exactly this length (2^{#levels below it}), 0 if none.
  std::uint64_t alive_count_at(std::size_t length) const {
    if (length > template_.size()) return 0;
    std::size_t below = 0;
    for (auto n : levels_) {
      if (n < length) ++below;
    }
    return below >= 64 ? UINT64_MAX : std::uint64_t{1} << below;
  }

  /// Choices made by x at the set branching levels it passes.
  BitString choices_of(const BitString& x) const {
    BitString c;
    for (auto n : levels_) {
      if (n < x.size()) c.push_back(x.bit(n));
    }
    return c;
  }

  /// The living leaf that makes choice c_j at level j (missing choices are 0).
  BitString leaf_for(const BitString& choices) const {
    BitString leaf = template_;
    for (std::size_t j = 0; j < levels_.size() && j < choices.size(); ++j) leaf.set_bit(levels_[j], choices.bit(j));
    return leaf;
  }

  /// Living node of length `length` following `choices` at the levels below it.
  BitString node_for(const BitString& choices, std::size_t length) const { return leaf_for(choices).prefix(length); }

  /// Case 1: extend every living leaf with 0s to length n, then both ways.
  void extend(Stage stage, std::size_t n) {
    if (n < template_.size()) throw std::logic_error("extend: branching level below current leaves");
    template_.append(BitString::zeros(n - template_.size()));
    template_.push_back(0);
    levels_.push_back(n);
    record({stage, TreeAction::Kind::kExtend, n, {}});
  }

  /// Injury at level i: keep β·γ above every living β of length n_i, kill the
  /// rest above β, drop levels i and up.
  void injure(Stage stage, std::size_t i, const BitString& gamma) {
    if (i >= levels_.size()) throw std::logic_error("injure: level not set");
    const std::size_t n = levels_[i];
    if (n + gamma.size() != template_.size()) throw std::logic_error("injure: suffix does not reach the leaves");
    BitString leaf = template_.prefix(n).concat(gamma);
    if (!alive(leaf)) throw std::logic_error("injure: suffix is not above a living node");
    template_ = std::move(leaf);
    levels_.resize(i);
    record({stage, TreeAction::Kind::kInjure, i, gamma});
  }

  void apply(const TreeAction& a) {
    if (a.kind == TreeAction::Kind::kExtend) {
      extend(a.stage, a.level);
    } else {
      injure(a.stage, a.level, a.suffix);
    }
  }

  static ConstructionTree replay(const std::vector<TreeAction>& actions) {
    ConstructionTree t;
    for (const auto& a : actions) t.apply(a);
    return t;
  }

  /// Explicit node -> status map. Exponential in the number of levels; meant
  /// for small trees and cross-checks.
  std::map<BitString, NodeStatus> materialize() const {
    std::map<BitString, NodeStatus> out;
    for (const auto& s : snapshots_) {
      const std::size_t k = s.levels.size();
      if (k > 20) throw std::length_error("materialize: tree too wide");
      for (std::uint64_t c = 0; c < (std::uint64_t{1} << k); ++c) {
        BitString leaf = s.leaf;
        for (std::size_t j = 0; j < k; ++j) leaf.set_bit(s.levels[j], static_cast<int>((c >> (k - 1 - j)) & 1));
        for (std::size_t len = 0; len <= leaf.size(); ++len) out.emplace(leaf.prefix(len), NodeStatus::kDead);
      }
    }
    for (auto& [x, st] : out) {
      if (alive(x)) st = NodeStatus::kAlive;
    }
    return out;
  }

  friend bool operator==(const ConstructionTree& a, const ConstructionTree& b) {
    return a.template_ == b.template_ && a.levels_ == b.levels_ && a.history_ == b.history_;
  }

 private:
  struct Snapshot {
    BitString leaf;
    std::vector<std::size_t> levels;
  };

  static bool alive_in(const BitString& leaf, const std::vector<std::size_t>& levels, const BitString& x) {
    if (x.size() > leaf.size()) return false;
    std::size_t next = 0;
    for (std::size_t p = 0; p < x.size(); ++p) {
      if (next < levels.size() && levels[next] == p) {
        ++next;
        continue;
      }
      if (x.bit(p) != leaf.bit(p)) return false;
    }
    return true;
  }

  void record(TreeAction a) {
    history_.push_back(std::move(a));
    snapshots_.push_back({template_, levels_});
    if (template_.size() > max_length_) max_length_ = template_.size();
  }

  BitString template_;
  std::vector<std::size_t> levels_;
  std::vector<Snapshot> snapshots_;
  std::vector<TreeAction> history_;
  std::size_t max_length_ = 0;
};

}  // namespace kcsim
