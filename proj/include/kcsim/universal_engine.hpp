#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/dyadic.hpp"
#include "kcsim/fhat.hpp"
#include "kcsim/function.hpp"
#include "kcsim/oracle.hpp"
#include "kcsim/request_set.hpp"
#include "kcsim/single_engine.hpp"

namespace kcsim {

/// Bits of a guess path at even positions: the finite-to-one guesses.
inline BitString even_bits(const BitString& eta) {
  BitString out;
  for (std::size_t j = 0; j < eta.size(); j += 2) out.push_back(eta.bit(j));
  return out;
}

/// R^alpha_i (kind 'R', i = |alpha|) or S^e_i (kind 'S').
struct RequirementId {
  char kind = 'R';
  std::size_t i = 0;
  std::size_t e = 0;
  BitString alpha;

  std::string text() const {
    if (kind == 'R') return "R:" + alpha.text() + ":" + std::to_string(i);
    return "S:" + std::to_string(e) + ":" + std::to_string(i);
  }
  friend bool operator==(const RequirementId&, const RequirementId&) = default;
};

/// Number of S^e_i with 2e+1 <= i.
inline std::uint64_t s_count_in_block(std::size_t i) { return (i + 1) / 2; }

/// Position of the first requirement of block i. Block i lists S^e_i
/// (ascending e) and then R^alpha_i (|alpha| = i, lexicographic alpha).
inline std::uint64_t block_start(std::size_t i) {
  if (i > 60) return std::numeric_limits<std::uint64_t>::max();
  std::uint64_t p = 0;
  for (std::size_t j = 0; j < i; ++j) p += s_count_in_block(j) + (std::uint64_t{1} << j);
  return p;
}

inline std::uint64_t position_of_s(std::size_t e, std::size_t i) {
  if (2 * e + 1 > i) throw std::invalid_argument("S^e_i needs i >= 2e+1");
  return block_start(i) + e;
}

inline std::uint64_t position_of_r(const BitString& alpha) {
  const std::size_t i = alpha.size();
  std::uint64_t v = 0;
  for (std::size_t j = 0; j < i; ++j) v = (v << 1) | static_cast<std::uint64_t>(alpha.bit(j));
  return block_start(i) + s_count_in_block(i) + v;
}

/// The first `count` requirements in priority order.
inline std::vector<RequirementId> order_requirements(std::size_t count) {
  std::vector<RequirementId> out;
  for (std::size_t i = 0; out.size() < count; ++i) {
    for (std::size_t e = 0; 2 * e + 1 <= i && out.size() < count; ++e) out.push_back({'S', i, e, {}});
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << i) && out.size() < count; ++v) {
      BitString a;
      for (std::size_t j = 0; j < i; ++j) a.push_back(static_cast<int>((v >> (i - 1 - j)) & 1));
      out.push_back({'R', i, 0, a});
    }
  }
  return out;
}

struct UniversalParams {
  std::size_t max_levels = 6;
  std::size_t max_targets = std::numeric_limits<std::size_t>::max();
  friend bool operator==(const UniversalParams&, const UniversalParams&) = default;
};

/// Branching levels are shared by all R^alpha_i whose alpha have the same even bits.
struct ClassKey {
  std::size_t i = 0;
  BitString guesses;
  friend auto operator<=>(const ClassKey&, const ClassKey&) = default;
  friend bool operator==(const ClassKey&, const ClassKey&) = default;
  std::string text() const { return std::to_string(i) + ":" + guesses.text(); }
};

struct GuessLeaf {
  BitString node;
  BitString eta;  // choices at the branching nodes it passes
  friend bool operator==(const GuessLeaf&, const GuessLeaf&) = default;
};

struct UniversalAction {
  RequirementId who;
  ActionCase action = ActionCase::kIdle;
  std::size_t n = 0;  // extend: new level of the class
  ClassKey cls;       // extend / injury
  std::optional<Request> request;
  std::optional<InjuryRecord> injury;
};

struct UniversalStageRecord {
  Stage stage = 0;
  std::size_t admitted = 0;
  std::vector<std::pair<std::size_t, ControlTransfer>> transfers;  // (e, transfer)
  std::vector<UniversalAction> actions;
};

/// All approximated functions phi_e on one tree. Even branching levels carry
/// the guess "phi_e is finite-to-one", odd levels keep the guess subtrees perfect.
class UniversalEngine {
 public:
  UniversalEngine(std::vector<std::shared_ptr<const ApproximatedFunction>> phis, UniversalParams params = {})
      : phis_(std::move(phis)), params_(params), fhat_(phis_.size()), requests_(phis_.size()),
        latest_(phis_.size()), live_(phis_.size()) {
    for (const auto& f : phis_) {
      for (Stage s : f->change_stages()) change_stages_.insert(s);
    }
    leaves_.push_back({BitString(), BitString()});
    ever_.insert(BitString());
  }

  void enqueue(const DescriptionEvent& e) {
    if (e.stage <= stage_) throw std::invalid_argument("enqueue: event stage already passed");
    if (!pending_.empty() && e.stage < pending_.back().stage) throw std::invalid_argument("enqueue: stages out of order");
    pending_.push_back(e);
  }
  void enqueue(const EventStream& s) {
    for (const auto& e : s.events) enqueue(e);
  }

  const UniversalStageRecord& step() {
    UniversalStageRecord rec;
    rec.stage = ++stage_;
    const Stage t = stage_;
    while (!pending_.empty() && pending_.front().stage <= t) {
      DescriptionEvent e = std::move(pending_.front());
      pending_.pop_front();
      AdmitResult r = enumeration_.admit(e);
      if (!r.ok()) throw InvalidStream(events_seen_, r);
      ++events_seen_;
      admitted_.push_back(e);
      if (r.verdict == AdmitVerdict::kAccepted) ++rec.admitted;
      bump(e.use);
    }
    const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(
        static_cast<std::uint64_t>(t) + 1, static_cast<std::uint64_t>(params_.max_targets)));
    const bool refresh = change_stages_.count(t) > 0;
    for (std::size_t e = 0; e < phis_.size(); ++e) {
      if (static_cast<Stage>(e) > t) break;
      if (refresh || !phi_started_[e]) {
        for (std::size_t k = 0; k < monitored_.size(); ++k) observe(e, monitored_[k], t, rec);
      }
      phi_started_[e] = true;
    }
    while (monitored_.size() < want) {
      monitored_.push_back(length_lex_string(monitored_.size()));
      for (std::size_t e = 0; e < phis_.size() && static_cast<Stage>(e) <= t; ++e) observe(e, monitored_.back(), t, rec);
    }
    bump(static_cast<std::size_t>(t));
    bump(max_leaf_length_);

    const std::uint64_t window = static_cast<std::uint64_t>(t) + 1;
    std::optional<std::uint64_t> last;
    for (;;) {
      auto cand = next_candidate(last, window);
      if (!cand) break;
      last = cand->position;
      rec.actions.push_back(act(*cand));
    }
    records_.push_back(std::move(rec));
    return records_.back();
  }

  void run_until(Stage horizon) {
    while (stage_ < horizon) step();
  }

  // --- tree queries ---------------------------------------------------------

  bool alive(const BitString& x) const {
    auto it = std::lower_bound(leaves_.begin(), leaves_.end(), x,
                               [](const GuessLeaf& l, const BitString& v) { return l.node < v; });
    return it != leaves_.end() && x.is_prefix_of(it->node);
  }

  NodeStatus status(const BitString& x) const {
    if (alive(x)) return NodeStatus::kAlive;
    auto it = ever_.lower_bound(x);
    if (it != ever_.end() && x.is_prefix_of(*it)) return NodeStatus::kDead;
    return NodeStatus::kAbsent;
  }

  /// Choices x makes at the branching levels it passes.
  BitString choices_of(const BitString& x) const {
    BitString eta;
    for (;;) {
      auto it = levels_.find(ClassKey{eta.size(), even_bits(eta)});
      if (it == levels_.end() || it->second >= x.size()) return eta;
      eta.push_back(x.bit(it->second));
    }
  }

  std::optional<std::size_t> level(const ClassKey& k) const {
    auto it = levels_.find(k);
    if (it == levels_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<GuessLeaf>& leaves() const { return leaves_; }
  const std::map<ClassKey, std::size_t>& levels() const { return levels_; }
  const std::set<BitString>& ever_leaves() const { return ever_; }
  std::uint64_t version() const { return version_; }

  // --- accessors --------------------------------------------------------------

  Stage stage() const { return stage_; }
  const UniversalParams& params() const { return params_; }
  std::size_t function_count() const { return phis_.size(); }
  const ApproximatedFunction& function(std::size_t e) const { return *phis_[e]; }
  const EnumerationState& enumeration() const { return enumeration_; }
  const std::vector<DescriptionEvent>& admitted_events() const { return admitted_; }
  const FhatState& fhat(std::size_t e) const { return fhat_[e]; }
  const RequestSet& requests(std::size_t e) const { return requests_[e]; }
  const std::vector<BitString>& monitored() const { return monitored_; }
  const std::vector<UniversalStageRecord>& records() const { return records_; }
  const std::map<ClassKey, std::size_t>& injury_counts() const { return injury_counts_; }
  const std::map<ClassKey, Stage>& last_injury() const { return last_injury_; }
  std::vector<InjuryRecord> injuries() const {
    std::vector<InjuryRecord> out;
    for (const auto& r : records_) {
      for (const auto& a : r.actions) {
        if (a.injury) out.push_back(*a.injury);
      }
    }
    return out;
  }

  /// S^e attention, ignoring the stage window: the least i and for it the
  /// length-lex least sigma.
  std::optional<Attention> s_attention(std::size_t e) {
    auto all = s_candidates(e);
    if (all.empty()) return std::nullopt;
    return all.front();
  }

  /// Classes whose R requirements require attention, with their first position.
  std::vector<std::pair<ClassKey, std::uint64_t>> r_attention() const {
    std::map<ClassKey, std::uint64_t> out;
    for (const auto& l : leaves_) {
      const std::size_t i = l.eta.size();
      if (i >= params_.max_levels) continue;
      ClassKey k{i, even_bits(l.eta)};
      if (levels_.count(k)) continue;
      const std::uint64_t p = position_of_r(l.eta);
      auto it = out.find(k);
      if (it == out.end() || p < it->second) out[k] = p;
    }
    return {out.begin(), out.end()};
  }

  /// Nothing relevant to the guess path `truth` requires attention: every
  /// correctly guessing leaf has all its levels, and no S^e with truth(e) acts.
  bool quiescent_for(const std::vector<bool>& truth) {
    for (const auto& l : leaves_) {
      if (guesses_agree(l.eta, truth) && l.eta.size() < params_.max_levels) return false;
    }
    for (std::size_t e = 0; e < phis_.size(); ++e) {
      if (e < truth.size() && truth[e] && s_attention(e)) return false;
    }
    return true;
  }

  /// eta's guess at every even position 2e equals truth(e) (false beyond truth).
  static bool guesses_agree(const BitString& eta, const std::vector<bool>& truth) {
    for (std::size_t j = 0; j < eta.size(); j += 2) {
      const std::size_t e = j / 2;
      const int want = e < truth.size() && truth[e] ? 1 : 0;
      if (eta.bit(j) != want) return false;
    }
    return true;
  }

 private:
  struct Candidate {
    std::uint64_t position = 0;
    RequirementId who;
    ClassKey cls;            // for R
    std::optional<Attention> att;  // for S
  };

  void bump(std::size_t v) {
    if (v > max_seen_) max_seen_ = v;
  }

  void observe(std::size_t e, const BitString& sigma, Stage t, UniversalStageRecord& rec) {
    if (auto tr = fhat_[e].observe(sigma, phis_[e]->value(sigma, t), t)) {
      if (tr->to > kMaxSupportedLadderIndex) {
        throw std::out_of_range("phi-hat ladder index " + std::to_string(tr->to) + " exceeds the supported range");
      }
      rec.transfers.emplace_back(e, *tr);
    }
  }

  void touch() {
    ++version_;
    for (const auto& l : leaves_) {
      if (l.node.size() > max_leaf_length_) max_leaf_length_ = l.node.size();
    }
  }

  void refresh_live() {
    if (live_version_ == version_ && live_count_ == enumeration_.pairs().size()) return;
    for (auto& m : live_) m.clear();
    const auto& pairs = enumeration_.pairs();
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& pair = pairs[p];
      if (!alive(pair.key)) continue;
      const BitString eta = choices_of(pair.key);
      LiveDescription d{p, pair.program.size(), pair.key};
      for (std::size_t e = 0; e < phis_.size(); ++e) {
        if (eta.size() > 2 * e && eta.bit(2 * e) != 1) continue;
        auto& m = live_[e];
        auto it = m.find(pair.output);
        if (it == m.end()) {
          m.emplace(pair.output, d);
        } else if (d.better_than(it->second)) {
          it->second = d;
        }
      }
    }
    live_version_ = version_;
    live_count_ = pairs.size();
  }

  /// All (i, least sigma) triggers of S^e, ascending i.
  std::vector<Attention> s_candidates(std::size_t e) {
    refresh_live();
    std::map<int, Attention> by_i;
    for (const auto& [sigma, desc] : live_[e]) {
      if (length_lex_index(sigma) >= monitored_.size()) continue;
      auto idx = fhat_[e].index(sigma);
      if (!idx) continue;
      const int i = *idx;
      if (static_cast<std::size_t>(i) < 2 * e + 1 || by_i.count(i)) continue;
      const std::size_t proposed = desc.program_length + static_cast<std::size_t>(ladder_value(i));
      auto current = requests_[e].min_length(sigma);
      if (current && proposed >= *current) continue;
      by_i.emplace(i, Attention{i, sigma, desc, proposed});
    }
    std::vector<Attention> out;
    for (auto& [_, a] : by_i) out.push_back(std::move(a));
    return out;
  }

  std::optional<Candidate> next_candidate(std::optional<std::uint64_t> after, std::uint64_t window) {
    std::optional<Candidate> best;
    auto consider = [&](Candidate c) {
      if (c.position >= window || (after && c.position <= *after)) return;
      if (!best || c.position < best->position) best = std::move(c);
    };
    for (const auto& [k, pos] : r_attention()) {
      Candidate c;
      c.position = pos;
      c.cls = k;
      c.who = RequirementId{'R', k.i, 0, {}};
      consider(std::move(c));
    }
    for (std::size_t e = 0; e < phis_.size(); ++e) {
      for (auto& a : s_candidates(e)) {
        Candidate c;
        c.position = position_of_s(e, static_cast<std::size_t>(a.requirement));
        c.who = RequirementId{'S', static_cast<std::size_t>(a.requirement), e, {}};
        c.att = std::move(a);
        consider(std::move(c));
      }
    }
    if (best && best->who.kind == 'R') {
      // name the acting requirement by its least alpha in the class
      BitString least;
      bool have = false;
      for (const auto& l : leaves_) {
        if (l.eta.size() == best->cls.i && even_bits(l.eta) == best->cls.guesses &&
            (!have || position_of_r(l.eta) < position_of_r(least))) {
          least = l.eta;
          have = true;
        }
      }
      best->who.alpha = least;
    }
    return best;
  }

  UniversalAction act(const Candidate& c) {
    UniversalAction out;
    out.who = c.who;
    if (c.who.kind == 'R') {
      const std::size_t n = max_seen_ + 1;
      std::vector<GuessLeaf> next;
      for (const auto& l : leaves_) {
        if (l.eta.size() == c.cls.i && even_bits(l.eta) == c.cls.guesses) {
          BitString base = l.node.concat(BitString::zeros(n - l.node.size()));
          next.push_back({base.with(0), l.eta.with(0)});
          next.push_back({base.with(1), l.eta.with(1)});
        } else {
          next.push_back(l);
        }
      }
      install(std::move(next));
      levels_[c.cls] = n;
      bump(n + 1);
      touch();
      out.action = ActionCase::kExtend;
      out.n = n;
      out.cls = c.cls;
      return out;
    }
    const std::size_t e = c.who.e;
    const Attention& att = *c.att;
    const auto ui = static_cast<std::size_t>(att.requirement);
    const BitString eta = choices_of(att.witness.key);
    if (eta.size() > ui) {
      ClassKey cls{ui, even_bits(eta.prefix(ui))};
      out.action = ActionCase::kInjury;
      out.cls = cls;
      out.injury = injure(cls, e, att);
      return out;
    }
    const auto& pair = enumeration_.pairs()[att.witness.pair_index];
    Request r{att.sigma, att.proposed_length, stage_, pair.key, pair.program, ladder_value(att.requirement)};
    requests_[e].append(r);
    latest_[e][att.witness.pair_index] = r.ladder_value;
    out.action = ActionCase::kRequest;
    out.request = r;
    return out;
  }

  InjuryRecord injure(const ClassKey& cls, std::size_t e, const Attention& att) {
    const std::size_t n = levels_.at(cls);
    const auto& pairs = enumeration_.pairs();
    auto in_family = [&](const BitString& eta) {
      return eta.size() > cls.i && even_bits(eta.prefix(cls.i)) == cls.guesses;
    };
    // Pairs above the affected branching nodes.
    std::vector<std::size_t> above;
    DyadicMass charged;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& pair = pairs[p];
      if (pair.key.size() <= n || !alive(pair.key) || !in_family(choices_of(pair.key))) continue;
      above.push_back(p);
      auto it = latest_[e].find(p);
      if (it != latest_[e].end()) {
        charged += DyadicMass::inverse_power(static_cast<std::int64_t>(pair.program.size()) + it->second - 1);
      }
    }
    const GuessLeaf* chosen = nullptr;
    DyadicMass best;
    for (const auto& l : leaves_) {
      if (!in_family(l.eta)) continue;
      DyadicMass m;
      for (auto p : above) {
        if (pairs[p].key.is_prefix_of(l.node)) m += pairs[p].mass();
      }
      if (!chosen || m > best) {
        chosen = &l;
        best = m;
      }
    }
    if (!chosen) throw InternalInvariantBreach("injury: no living leaf above level " + std::to_string(n));
    InjuryRecord rec;
    rec.stage = stage_;
    rec.level = cls.i;
    rec.n = n;
    rec.ladder_index = static_cast<int>(cls.i);
    rec.trigger_sigma = att.sigma;
    rec.trigger_use = att.witness.use();
    rec.alpha = chosen->node.prefix(n);
    rec.gamma = chosen->node.suffix_from(n);
    rec.m = best;
    rec.charged = charged;
    rec.family = static_cast<int>(e);

    std::vector<GuessLeaf> next;
    std::set<BitString> grafted;
    for (const auto& l : leaves_) {
      if (!in_family(l.eta)) {
        next.push_back(l);
        continue;
      }
      BitString leaf = l.node.prefix(n).concat(rec.gamma);
      if (!alive(leaf)) throw InternalInvariantBreach("injury: grafted suffix is not alive above " + l.node.prefix(n).text());
      if (grafted.insert(leaf).second) next.push_back({leaf, l.eta.prefix(cls.i)});
    }
    install(std::move(next));
    for (auto it = levels_.begin(); it != levels_.end();) {
      if (it->first.i >= cls.i && cls.guesses.is_prefix_of(it->first.guesses)) {
        it = levels_.erase(it);
      } else {
        ++it;
      }
    }
    ++injury_counts_[cls];
    last_injury_[cls] = stage_;
    touch();
    return rec;
  }

  void install(std::vector<GuessLeaf> next) {
    std::sort(next.begin(), next.end(), [](const GuessLeaf& a, const GuessLeaf& b) { return a.node < b.node; });
    leaves_ = std::move(next);
    for (const auto& l : leaves_) ever_.insert(l.node);
    for (std::size_t k = 1; k < leaves_.size(); ++k) {
      if (leaves_[k - 1].node.is_prefix_of(leaves_[k].node)) throw InternalInvariantBreach("leaf set is not an antichain");
    }
  }

  std::vector<std::shared_ptr<const ApproximatedFunction>> phis_;
  UniversalParams params_;
  std::set<Stage> change_stages_;
  Stage stage_ = 0;
  std::deque<DescriptionEvent> pending_;
  std::vector<DescriptionEvent> admitted_;
  std::size_t events_seen_ = 0;
  EnumerationState enumeration_;
  std::vector<FhatState> fhat_;
  std::vector<RequestSet> requests_;
  std::vector<std::map<std::size_t, std::int64_t>> latest_;
  std::vector<std::map<BitString, LiveDescription, LengthLexLess>> live_;
  std::uint64_t live_version_ = UINT64_MAX;
  std::size_t live_count_ = 0;
  std::map<std::size_t, bool> phi_started_;
  std::vector<BitString> monitored_;
  std::vector<GuessLeaf> leaves_;  // sorted by node
  std::set<BitString> ever_;
  std::map<ClassKey, std::size_t> levels_;
  std::map<ClassKey, std::size_t> injury_counts_;
  std::map<ClassKey, Stage> last_injury_;
  std::vector<UniversalStageRecord> records_;
  std::uint64_t version_ = 0;
  std::size_t max_leaf_length_ = 0;
  std::size_t max_seen_ = 0;
};

/// T*: living leaves whose guess at every even branching node is correct.
struct TStar {
  std::vector<GuessLeaf> leaves;
  std::size_t settled_depth = 0;     // levels passed by every T* leaf
  std::size_t perfection_depth = 0;  // odd levels below settled_depth fully doubled in T*
  bool perfect = false;              // every odd level below settled_depth is doubled
};

inline TStar extract_tstar(const UniversalEngine& engine, const std::vector<bool>& truth) {
  TStar out;
  for (const auto& l : engine.leaves()) {
    if (UniversalEngine::guesses_agree(l.eta, truth)) out.leaves.push_back(l);
  }
  if (out.leaves.empty()) return out;
  std::size_t k = SIZE_MAX;
  for (const auto& l : out.leaves) k = std::min(k, l.eta.size());
  out.settled_depth = k;
  std::set<BitString> prefixes;
  for (const auto& l : out.leaves) {
    for (std::size_t j = 0; j <= l.eta.size(); ++j) prefixes.insert(l.eta.prefix(j));
  }
  bool all = true;
  for (std::size_t j = 1; j < k; j += 2) {
    bool doubled = true;
    for (const auto& l : out.leaves) {
      BitString flip = l.eta.prefix(j).with(1 - l.eta.bit(j));
      if (!prefixes.count(flip)) {
        doubled = false;
        break;
      }
    }
    if (doubled) {
      ++out.perfection_depth;
    } else {
      all = false;
    }
  }
  out.perfect = all;
  return out;
}

}  // namespace kcsim
