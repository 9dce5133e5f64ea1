#pragma once

#include <map>
#include <optional>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/function.hpp"

namespace kcsim {

/// Control of σ moved from one ladder index to another (from == -1: first value).
struct ControlTransfer {
  BitString sigma;
  int from = -1;
  int to = 0;
  friend bool operator==(const ControlTransfer&, const ControlTransfer&) = default;
};

/// f̂_s(σ) = least c_i such that f_t(σ) < c_{i+1} for some queried t <= s.
/// Only the minimum queried value matters, so that is what is kept.
class FhatState {
 public:
  /// Folds in f_s(σ) for one queried (σ, s). Returns the transfer if the
  /// ladder index changed or was set for the first time.
  std::optional<ControlTransfer> observe(const BitString& sigma, std::int64_t value, Stage s) {
    auto it = entries_.find(sigma);
    if (it == entries_.end()) {
      Entry e{value, ladder_index(value), s};
      entries_.emplace(sigma, e);
      return ControlTransfer{sigma, -1, e.index};
    }
    Entry& e = it->second;
    if (value >= e.min_value) return std::nullopt;
    e.min_value = value;
    int idx = ladder_index(value);
    if (idx == e.index) return std::nullopt;
    ControlTransfer t{sigma, e.index, idx};
    e.index = idx;
    return t;
  }

  std::optional<int> index(const BitString& sigma) const {
    auto it = entries_.find(sigma);
    if (it == entries_.end()) return std::nullopt;
    return it->second.index;
  }
  std::optional<std::int64_t> value(const BitString& sigma) const {
    auto i = index(sigma);
    if (!i) return std::nullopt;
    return ladder_value(*i);
  }
  std::optional<Stage> first_seen(const BitString& sigma) const {
    auto it = entries_.find(sigma);
    if (it == entries_.end()) return std::nullopt;
    return it->second.first_seen;
  }

  /// σ -> ladder index, i.e. which S_i controls σ.
  std::map<BitString, int> control_map() const {
    std::map<BitString, int> m;
    for (const auto& [s, e] : entries_) m.emplace(s, e.index);
    return m;
  }

 private:
  struct Entry {
    std::int64_t min_value;
    int index;
    Stage first_seen;
  };
  std::map<BitString, Entry, LengthLexLess> entries_;
};

/// One Substage-1 update: query f at stage s on every target (all targets
/// when `refresh_all`, otherwise only those not seen before).
inline std::vector<ControlTransfer> fhat_step(FhatState& state, const ApproximatedFunction& f, Stage s,
                                              const std::vector<BitString>& targets, bool refresh_all = true) {
  std::vector<ControlTransfer> out;
  for (const auto& sigma : targets) {
    if (!refresh_all && state.index(sigma)) continue;
    if (auto t = state.observe(sigma, f.value(sigma, s), s)) out.push_back(*t);
  }
  return out;
}

}  // namespace kcsim
