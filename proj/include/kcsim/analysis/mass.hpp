#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kcsim/analysis/report.hpp"
#include "kcsim/bitstring.hpp"
#include "kcsim/dyadic.hpp"
#include "kcsim/kraft_chaitin.hpp"
#include "kcsim/oracle.hpp"
#include "kcsim/request_set.hpp"

namespace kcsim {

/// Mass attached to one choice string sigma of the final living tree: the
/// pairs whose key follows sigma at the branching levels and passes exactly
/// |sigma| of them.
struct ChoiceMass {
  std::vector<std::size_t> pairs;
  DyadicMass m;
};

struct MassDecomposition {
  DyadicMass lambda;
  DyadicMass delta;
  DyadicMass delta_prime;
  DyadicMass delta_double_prime;
  std::map<BitString, ChoiceMass, LengthLexLess> per_sigma;
  std::size_t charged_pairs = 0;   // pairs that produced at least one request
  std::size_t living_pairs = 0;    // pairs on the final living tree
  std::size_t unmatched_requests = 0;  // requests whose origin is not an admitted pair
};

/// Everything the accounting needs from a finished run.
struct AccountingInput {
  const std::vector<ExactPair>* pairs = nullptr;
  const std::vector<Request>* requests = nullptr;
  std::function<bool(const BitString&)> alive;
  std::function<BitString(const BitString&)> choices;
};

/// Latest ladder value charged per pair (pair index -> c), from the request log.
inline std::map<std::size_t, std::int64_t> latest_ladder_by_pair(const std::vector<ExactPair>& pairs,
                                                                 const std::vector<Request>& requests,
                                                                 std::size_t* unmatched = nullptr) {
  std::map<std::pair<BitString, BitString>, std::size_t> index;
  for (std::size_t p = 0; p < pairs.size(); ++p) index.emplace(std::make_pair(pairs[p].key, pairs[p].program), p);
  std::map<std::size_t, std::int64_t> out;
  for (const auto& r : requests) {
    auto it = index.find({r.origin_key, r.origin_program});
    if (it == index.end()) {
      if (unmatched) ++*unmatched;
      continue;
    }
    out[it->second] = r.ladder_value;
  }
  return out;
}

/// Delta sums 2 * 2^(-|tau| - c) over the pairs that produced requests, c the
/// ladder value of the pair's latest request; Delta' keeps the pairs whose key
/// is still alive, Delta'' the killed ones.
inline MassDecomposition decompose_mass(const AccountingInput& in) {
  MassDecomposition d;
  for (const auto& r : *in.requests) d.lambda += r.mass();
  auto latest = latest_ladder_by_pair(*in.pairs, *in.requests, &d.unmatched_requests);
  const auto& pairs = *in.pairs;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const bool alive = in.alive(pairs[p].key);
    if (alive) {
      ++d.living_pairs;
      auto& slot = d.per_sigma[in.choices(pairs[p].key)];
      slot.pairs.push_back(p);
      slot.m += pairs[p].mass();
    }
    auto it = latest.find(p);
    if (it == latest.end()) continue;
    ++d.charged_pairs;
    const DyadicMass w = DyadicMass::inverse_power(static_cast<std::int64_t>(pairs[p].program.size()) + it->second - 1);
    d.delta += w;
    (alive ? d.delta_prime : d.delta_double_prime) += w;
  }
  return d;
}

/// Exact bound checks on a decomposition and the request set behind it.
inline Report verify_mass_bounds(const MassDecomposition& d, const std::vector<Request>& requests, std::size_t shift = 2) {
  Report r;
  const DyadicMass two = DyadicMass::power_of_two(1);
  const DyadicMass four = DyadicMass::power_of_two(2);
  r.add(bound_check("delta_prime", d.delta_prime, two));
  r.add(bound_check("delta_double_prime", d.delta_double_prime, two));
  r.add(bound_check("delta", d.delta, four));
  r.add(bound_check("lambda_le_delta", d.lambda, d.delta));
  r.add(bound_check("lambda", d.lambda, four));
  r.add(bound_check("kraft_shift" + std::to_string(shift), kraft_sum(requests, shift), DyadicMass::one()));
  {
    Check c{"delta_partition", d.delta == d.delta_prime + d.delta_double_prime, "-", ""};
    c.detail = d.delta.to_string() + " = " + d.delta_prime.to_string() + " + " + d.delta_double_prime.to_string();
    r.add(c);
  }
  {
    Check c{"request_origins", d.unmatched_requests == 0, "-",
            std::to_string(d.unmatched_requests) + " requests without an admitted origin"};
    r.add(c);
  }
  // Along every choice string the masses m_sigma' of its prefixes sum to at most 1.
  DyadicMass worst;
  std::string worst_at = "-";
  for (const auto& [sigma, cm] : d.per_sigma) {
    DyadicMass s;
    for (std::size_t k = 0; k <= sigma.size(); ++k) {
      auto it = d.per_sigma.find(sigma.prefix(k));
      if (it != d.per_sigma.end()) s += it->second.m;
    }
    if (s > worst) {
      worst = s;
      worst_at = sigma.text();
    }
  }
  r.add(bound_check("choice_path_mass", worst, DyadicMass::one(), worst.to_string() + " <= 1 at " + worst_at));
  return r;
}

/// The ledger kept by a request set agrees with a fresh sum.
inline Check verify_ledger(const RequestSet& L) {
  Check c{"ledger", L.ledger() == L.recomputed_mass(), "-", L.ledger().to_string()};
  return c;
}

}  // namespace kcsim
