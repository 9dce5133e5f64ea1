#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/dyadic.hpp"
#include "kcsim/request_set.hpp"

namespace kcsim {

class MassExceedsOne : public std::runtime_error {
 public:
  explicit MassExceedsOne(const DyadicMass& m)
      : std::runtime_error("Kraft sum " + m.to_string() + " exceeds 1"), mass_(m) {}
  const DyadicMass& mass() const { return mass_; }

 private:
  DyadicMass mass_;
};

/// Σ 2^-(l + shift) over the requests.
inline DyadicMass kraft_sum(const std::vector<Request>& requests, std::size_t shift) {
  DyadicMass m;
  for (const auto& r : requests) m += DyadicMass::inverse_power(static_cast<std::int64_t>(r.length + shift));
  return m;
}
inline DyadicMass kraft_sum(const RequestSet& L, std::size_t shift) { return kraft_sum(L.requests(), shift); }

struct CodeAssignment {
  BitString target;
  std::size_t request_length = 0;
  BitString codeword;
};

/// Online prefix-free code for a request sequence. Free space is a set of
/// aligned dyadic intervals (named by their prefix); each request takes the
/// leftmost free interval that is large enough and returns the unused halves
/// to the free set. Under this rule free intervals have pairwise distinct
/// sizes, increasing left to right, so allocation succeeds whenever the total
/// requested mass is at most 1.
class PrefixCode {
 public:
  explicit PrefixCode(std::size_t shift = 2) : shift_(shift) { free_.push_back(BitString()); }

  std::size_t shift() const { return shift_; }

  /// Throws MassExceedsOne if no free interval can hold the request.
  const CodeAssignment& add(const Request& r) {
    const std::size_t len = r.length + shift_;
    auto it = std::find_if(free_.begin(), free_.end(), [&](const BitString& w) { return w.size() <= len; });
    if (it == free_.end()) throw MassExceedsOne(used_ + DyadicMass::inverse_power(static_cast<std::int64_t>(len)));
    BitString w = *it;
    it = free_.erase(it);
    std::vector<BitString> pieces;  // left to right
    for (std::size_t d = len; d > w.size(); --d) {
      BitString piece = w.concat(BitString::zeros(d - 1 - w.size()));
      piece.push_back(1);
      pieces.push_back(std::move(piece));
    }
    free_.insert(it, pieces.begin(), pieces.end());
    assignments_.push_back({r.target, r.length, w.concat(BitString::zeros(len - w.size()))});
    used_ += DyadicMass::inverse_power(static_cast<std::int64_t>(len));
    auto best = best_.find(r.target);
    if (best == best_.end() || len < best->second) best_[r.target] = len;
    return assignments_.back();
  }

  const std::vector<CodeAssignment>& assignments() const { return assignments_; }
  const DyadicMass& used() const { return used_; }

  /// Shortest codeword length for the target, nullopt when there is none.
  std::optional<std::size_t> complexity(const BitString& target) const {
    auto it = best_.find(target);
    if (it == best_.end()) return std::nullopt;
    return it->second;
  }

  /// Code dump: one line per assignment in admission order.
  void dump(std::ostream& os) const {
    for (std::size_t i = 0; i < assignments_.size(); ++i) {
      const auto& a = assignments_[i];
      os << i << ' ' << a.target.text() << ' ' << a.request_length << ' ' << a.codeword.text() << '\n';
    }
  }

 private:
  std::size_t shift_;
  std::vector<BitString> free_;  // sorted left to right
  std::vector<CodeAssignment> assignments_;
  std::map<BitString, std::size_t> best_;
  DyadicMass used_;
};

/// Checks the precondition up front, then assigns codewords in request order.
inline PrefixCode build_prefix_code(const std::vector<Request>& requests, std::size_t shift) {
  DyadicMass total = kraft_sum(requests, shift);
  if (total > DyadicMass::one()) throw MassExceedsOne(total);
  PrefixCode code(shift);
  for (const auto& r : requests) code.add(r);
  return code;
}
inline PrefixCode build_prefix_code(const RequestSet& L, std::size_t shift) { return build_prefix_code(L.requests(), shift); }

inline std::optional<std::size_t> machine_complexity(const PrefixCode& code, const BitString& target) {
  return code.complexity(target);
}

}  // namespace kcsim
