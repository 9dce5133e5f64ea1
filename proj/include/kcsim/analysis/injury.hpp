#pragma once

#include <string>
#include <vector>

#include "kcsim/analysis/mass.hpp"
#include "kcsim/analysis/report.hpp"
#include "kcsim/dyadic.hpp"
#include "kcsim/function.hpp"
#include "kcsim/single_engine.hpp"
#include "kcsim/tree.hpp"

namespace kcsim {

/// Per injury: the Delta-mass already paid on living paths above n_i is at
/// most m / 2^(c_i + 1).
inline Report verify_injury_charge(const std::vector<InjuryRecord>& injuries) {
  Report r;
  for (std::size_t k = 0; k < injuries.size(); ++k) {
    const auto& inj = injuries[k];
    const std::int64_t c = ladder_value(inj.ladder_index);
    const DyadicMass bound = DyadicMass::from_parts(inj.m.numerator(), inj.m.exponent() + c + 1);
    std::string name = "injury_charge[" + std::to_string(k) + "]";
    std::string detail = "stage=" + std::to_string(inj.stage) + " level=" + std::to_string(inj.level) +
                         (inj.family >= 0 ? " family=" + std::to_string(inj.family) : std::string()) +
                         " charged=" + inj.charged.to_string() + " m=" + inj.m.to_string() + " c=" + std::to_string(c);
    r.add(bound_check(std::move(name), inj.charged, bound, std::move(detail)));
  }
  return r;
}

/// c_{i+l} >= c_i + i + 2l + 2 for 0 <= i <= i_max, 1 <= l <= l_max, and
/// 2^((i^2+3i+2)/2) / 2^(c_i+1) <= 2^-i for 0 <= i <= i_max (compared on exponents).
inline Report verify_ladder_inequality(int i_max, int l_max) {
  auto c = [](int i) -> BigInt { return i == 0 ? BigInt(0) : BigInt(1) << (2 * i); };
  Report r;
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::string first_fail;
  for (int i = 0; i <= i_max; ++i) {
    for (int l = 1; l <= l_max; ++l) {
      ++checked;
      if (c(i + l) < c(i) + i + 2 * l + 2) {
        if (failed++ == 0) first_fail = "i=" + std::to_string(i) + " l=" + std::to_string(l);
      }
    }
  }
  r.add(Check{"ladder_gap", failed == 0, "-",
              std::to_string(checked) + " pairs, " + std::to_string(failed) + " failures" +
                  (first_fail.empty() ? "" : " first " + first_fail)});
  std::size_t closure_failed = 0;
  BigInt tightest = -1;
  for (int i = 0; i <= i_max; ++i) {
    // exponent of the left side minus exponent of the right side must be <= 0
    BigInt lhs = BigInt((i + 1) * (i + 2) / 2) - c(i) - 1;
    BigInt gap = -i - lhs;
    if (gap < 0) ++closure_failed;
    if (tightest < 0 || gap < tightest) tightest = gap;
  }
  std::ostringstream os;
  os << (i_max + 1) << " values, " << closure_failed << " failures, smallest exponent gap " << tightest;
  r.add(Check{"waste_closure", closure_failed == 0, "-", os.str()});
  return r;
}

/// Recomputes m, the chosen leaf and the charged mass of every injury of a
/// single-function run from the replayed tree and logs, by brute force over
/// the living leaves, and compares with what the engine recorded.
inline Report audit_single_injuries(const SingleEngine& engine, std::size_t max_levels_for_audit = 16) {
  Report r;
  const auto& history = engine.tree().history();
  const auto& pairs = engine.enumeration().pairs();
  const auto& requests = engine.requests().requests();
  std::size_t k = 0;
  for (const auto& inj : engine.injuries()) {
    std::vector<TreeAction> before;
    for (const auto& a : history) {
      if (a.stage < inj.stage) before.push_back(a);
    }
    ConstructionTree tree = ConstructionTree::replay(before);
    std::vector<ExactPair> seen;
    for (const auto& p : pairs) {
      if (p.stage <= inj.stage) seen.push_back(p);
    }
    std::vector<Request> earlier;
    for (const auto& q : requests) {
      if (q.stage < inj.stage) earlier.push_back(q);
    }
    auto latest = latest_ladder_by_pair(seen, earlier);
    const std::string name = "injury_audit[" + std::to_string(k++) + "]";
    const std::size_t levels = tree.level_count();
    if (inj.level >= levels || levels > max_levels_for_audit) {
      r.add(Check{name, inj.level < levels, "-", "skipped: " + std::to_string(levels) + " levels"});
      continue;
    }
    const std::size_t n = tree.levels()[inj.level];
    DyadicMass best;
    BitString best_leaf;
    bool have = false;
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << levels); ++v) {
      BitString choices;
      for (std::size_t j = 0; j < levels; ++j) choices.push_back(static_cast<int>((v >> (levels - 1 - j)) & 1));
      const BitString leaf = tree.leaf_for(choices);
      DyadicMass m;
      for (const auto& p : seen) {
        if (p.key.size() > n && p.key.is_prefix_of(leaf)) m += p.mass();
      }
      if (!have || m > best) {
        best = m;
        best_leaf = leaf;
        have = true;
      }
    }
    DyadicMass charged;
    for (std::size_t p = 0; p < seen.size(); ++p) {
      auto it = latest.find(p);
      if (it == latest.end() || seen[p].key.size() <= n || !tree.alive(seen[p].key)) continue;
      charged += DyadicMass::inverse_power(static_cast<std::int64_t>(seen[p].program.size()) + it->second - 1);
    }
    const bool same = best == inj.m && best_leaf == inj.alpha.concat(inj.gamma) && charged == inj.charged &&
                      n == inj.n;
    r.add(Check{name, same, "-",
                "stage=" + std::to_string(inj.stage) + " m=" + best.to_string() + " charged=" + charged.to_string() +
                    " leaf=" + best_leaf.text()});
  }
  return r;
}

}  // namespace kcsim
