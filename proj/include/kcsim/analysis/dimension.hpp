#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcsim/analysis/report.hpp"
#include "kcsim/generator.hpp"
#include "kcsim/kraft_chaitin.hpp"
#include "kcsim/single_engine.hpp"

namespace kcsim {

class SampleUnresolved : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sigma = S|n for a real S, checked against the living path through `leaf`.
struct DimensionSample {
  BitString prefix;
  BitString leaf;
};

struct DimensionRow {
  std::size_t n = 0;
  std::uint64_t log_floor = 0;  // floor(log2 n); the vanishing term is log_floor / n
  std::size_t k = 0;            // machine complexity with the code shift
  std::size_t k_rel = 0;        // kOf(leaf, sigma)
  std::size_t k_any = 0;        // shortest description on any oracle
  std::int64_t left_slack = 0;  // (K^A + shift) - (K - log)
  std::int64_t right_slack = 0; // (K_any + c_right) - K^A
  std::string log_term() const { return std::to_string(log_floor) + "/" + std::to_string(n); }
};

struct DimensionResult {
  std::vector<DimensionRow> rows;
  std::int64_t c_right = 0;
  Report report;
};

inline std::uint64_t floor_log2(std::uint64_t n) { return n == 0 ? 0 : std::bit_width(n) - 1; }

/// Per sample: K(S|n) - floor(log2 n) <= K^A(S|n) + shift, and
/// K^A(S|n) <= K_any(S|n) + c_right where c_right is the spread of program
/// lengths in the run.
inline DimensionResult dimension_check(const SingleEngine& engine, const std::vector<DimensionSample>& samples,
                                       std::size_t shift = 2) {
  DimensionResult out;
  const PrefixCode code = build_prefix_code(engine.requests(), shift);
  const auto& pairs = engine.enumeration().pairs();
  const auto& table = engine.enumeration().table();
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& p : pairs) {
    lo = std::min(lo, p.program.size());
    hi = std::max(hi, p.program.size());
  }
  out.c_right = pairs.empty() ? 0 : static_cast<std::int64_t>(hi - lo);
  std::size_t left_fail = 0, right_fail = 0;
  for (const auto& s : samples) {
    if (s.prefix.empty()) throw SampleUnresolved("sample with n = 0");
    auto mc = code.complexity(s.prefix);
    auto ka = table.k_of(s.leaf, s.prefix);
    if (!mc || !ka) throw SampleUnresolved("no description for " + s.prefix.text() + " on " + s.leaf.text());
    std::optional<std::size_t> kany;
    for (const auto& p : pairs) {
      if (p.output == s.prefix && (!kany || p.program.size() < *kany)) kany = p.program.size();
    }
    DimensionRow row;
    row.n = s.prefix.size();
    row.log_floor = floor_log2(row.n);
    row.k = *mc;
    row.k_rel = *ka;
    row.k_any = *kany;
    row.left_slack = static_cast<std::int64_t>(*ka + shift) -
                     (static_cast<std::int64_t>(*mc) - static_cast<std::int64_t>(row.log_floor));
    row.right_slack = static_cast<std::int64_t>(*kany) + out.c_right - static_cast<std::int64_t>(*ka);
    left_fail += row.left_slack < 0;
    right_fail += row.right_slack < 0;
    out.rows.push_back(row);
  }
  out.report.add(Check{"dimension_left", left_fail == 0, "-",
                       std::to_string(samples.size()) + " samples, " + std::to_string(left_fail) + " failures"});
  out.report.add(Check{"dimension_right", right_fail == 0, "-",
                       std::to_string(samples.size()) + " samples, " + std::to_string(right_fail) +
                           " failures, c_right=" + std::to_string(out.c_right)});
  return out;
}

/// Up to `count` samples: a described monitored sigma and a random living
/// leaf through the key of its best living description.
inline std::vector<DimensionSample> pick_dimension_samples(SingleEngine& engine, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const auto& pairs = engine.enumeration().pairs();
  const auto& tree = engine.tree();
  std::vector<std::size_t> candidates;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (!pairs[p].output.empty() && tree.alive(pairs[p].key) &&
        length_lex_index(pairs[p].output) < engine.monitored().size()) {
      candidates.push_back(p);
    }
  }
  std::vector<DimensionSample> out;
  if (candidates.empty()) return out;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& p = pairs[candidates[rng.below(candidates.size())]];
    BitString choices = tree.choices_of(p.key);
    choices.append(rng.bits(tree.level_count() - choices.size()));
    out.push_back({p.output, tree.leaf_for(choices)});
  }
  return out;
}

}  // namespace kcsim
