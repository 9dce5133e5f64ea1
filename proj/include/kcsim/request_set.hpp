#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/dyadic.hpp"
#include "kcsim/oracle.hpp"

namespace kcsim {

/// A Kraft-Chaitin request <target, length>, remembering the exact pair whose
/// description triggered it and the ladder value charged.
struct Request {
  BitString target;
  std::size_t length = 1;
  Stage stage = 0;
  BitString origin_key;
  BitString origin_program;
  std::int64_t ladder_value = 0;

  DyadicMass mass() const { return DyadicMass::inverse_power(static_cast<std::int64_t>(length)); }
  friend bool operator==(const Request&, const Request&) = default;
};

/// Append-only request set with a running exact mass ledger.
class RequestSet {
 public:
  /// Requests must not lengthen the current best description of their target.
  void append(Request r) {
    if (r.length == 0) throw std::invalid_argument("RequestSet: request length must be positive");
    auto it = min_length_.find(r.target);
    if (it == min_length_.end()) {
      min_length_.emplace(r.target, r.length);
    } else if (r.length < it->second) {
      it->second = r.length;
    }
    ledger_ += r.mass();
    requests_.push_back(std::move(r));
  }

  std::optional<std::size_t> min_length(const BitString& target) const {
    auto it = min_length_.find(target);
    if (it == min_length_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<Request>& requests() const { return requests_; }
  std::size_t size() const { return requests_.size(); }
  bool empty() const { return requests_.empty(); }
  const DyadicMass& ledger() const { return ledger_; }

  /// Independent recomputation of the ledger.
  DyadicMass recomputed_mass() const {
    DyadicMass m;
    for (const auto& r : requests_) m += r.mass();
    return m;
  }

  friend bool operator==(const RequestSet& a, const RequestSet& b) { return a.requests_ == b.requests_; }

 private:
  std::vector<Request> requests_;
  std::map<BitString, std::size_t> min_length_;
  DyadicMass ledger_;
};

}  // namespace kcsim
