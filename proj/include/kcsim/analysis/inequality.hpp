#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcsim/analysis/report.hpp"
#include "kcsim/kraft_chaitin.hpp"
#include "kcsim/single_engine.hpp"
#include "kcsim/universal_engine.hpp"

namespace kcsim {

/// True when no approximation change can happen after `stage`.
inline bool approximation_settled(const ApproximatedFunction& f, Stage stage) {
  for (Stage s : f.change_stages()) {
    if (s > stage) return false;
  }
  return true;
}

/// All living leaves of a uniform tree, left to right.
inline std::vector<BitString> living_leaves(const ConstructionTree& tree) {
  const std::size_t k = tree.level_count();
  if (k > 20) throw std::length_error("living_leaves: too many levels to enumerate");
  std::vector<BitString> out;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << k); ++v) {
    BitString c;
    for (std::size_t j = 0; j < k; ++j) c.push_back(static_cast<int>((v >> (k - 1 - j)) & 1));
    out.push_back(tree.leaf_for(c));
  }
  return out;
}

namespace detail {

struct InequalityTally {
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::optional<std::int64_t> min_slack;
  std::string first_violation;

  void note(const BitString& sigma, const BitString& leaf, std::optional<std::size_t> mc, std::size_t k,
            std::int64_t fhat, std::size_t shift) {
    ++checked;
    const std::int64_t rhs = static_cast<std::int64_t>(k) + fhat + static_cast<std::int64_t>(shift);
    const bool ok = mc && static_cast<std::int64_t>(*mc) <= rhs;
    if (mc) {
      const std::int64_t slack = rhs - static_cast<std::int64_t>(*mc);
      if (!min_slack || slack < *min_slack) min_slack = slack;
    }
    if (!ok && violations++ == 0) {
      first_violation = " first sigma=" + sigma.text() + " A=" + leaf.text() +
                        " mc=" + (mc ? std::to_string(*mc) : std::string("none")) + " rhs=" + std::to_string(rhs);
    }
  }

  Check check(std::string name) const {
    Check c;
    c.name = std::move(name);
    c.pass = violations == 0;
    c.margin = min_slack ? std::to_string(*min_slack) : "-";
    c.detail = std::to_string(checked) + " pairs, " + std::to_string(violations) + " violations" + first_violation;
    return c;
  }
};

}  // namespace detail

/// machineComplexity(code(L, shift), sigma) <= kOf(A, sigma) + fhat(sigma) + shift
/// for every living leaf A and every monitored sigma with a settled fhat.
/// Meaningful on quiescent runs only.
inline Check verify_main_inequality(const SingleEngine& engine, std::size_t shift = 2) {
  const PrefixCode code = build_prefix_code(engine.requests(), shift);
  detail::InequalityTally tally;
  if (approximation_settled(engine.function(), engine.stage())) {
    const auto leaves = living_leaves(engine.tree());
    const auto& table = engine.enumeration().table();
    for (const auto& sigma : table.targets()) {
      if (length_lex_index(sigma) >= engine.monitored().size()) continue;
      auto fh = engine.fhat().value(sigma);
      if (!fh) continue;
      for (const auto& leaf : leaves) {
        auto k = table.k_of(leaf, sigma);
        if (k) tally.note(sigma, leaf, code.complexity(sigma), *k, *fh, shift);
      }
    }
  }
  return tally.check("main_inequality");
}

/// Same inequality for L_e, over the T* leaves and sigma with phi-hat_e >= c_{2e+1}.
inline Check verify_main_inequality(const UniversalEngine& engine, std::size_t e, const std::vector<GuessLeaf>& tstar,
                                    std::size_t shift = 2) {
  const PrefixCode code = build_prefix_code(engine.requests(e), shift);
  detail::InequalityTally tally;
  if (approximation_settled(engine.function(e), engine.stage())) {
    const auto& table = engine.enumeration().table();
    for (const auto& sigma : table.targets()) {
      if (length_lex_index(sigma) >= engine.monitored().size()) continue;
      auto idx = engine.fhat(e).index(sigma);
      if (!idx || static_cast<std::size_t>(*idx) < 2 * e + 1) continue;
      for (const auto& leaf : tstar) {
        auto k = table.k_of(leaf.node, sigma);
        if (k) tally.note(sigma, leaf.node, code.complexity(sigma), *k, ladder_value(*idx), shift);
      }
    }
  }
  return tally.check("main_inequality_e" + std::to_string(e));
}

}  // namespace kcsim
