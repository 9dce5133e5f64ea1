#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/dyadic.hpp"
#include "kcsim/fhat.hpp"
#include "kcsim/function.hpp"
#include "kcsim/oracle.hpp"
#include "kcsim/request_set.hpp"
#include "kcsim/tree.hpp"

namespace kcsim {

/// Ladder indices above this would need masses like 2^-(4^9); refuse them.
inline constexpr int kMaxSupportedLadderIndex = 8;

struct EngineParams {
  /// R_i with i >= max_levels never requires attention.
  std::size_t max_levels = 8;
  /// Upper bound on the number of monitored strings (first min(s+1, max_targets)).
  std::size_t max_targets = std::numeric_limits<std::size_t>::max();

  friend bool operator==(const EngineParams&, const EngineParams&) = default;
};

class InvalidStream : public std::runtime_error {
 public:
  InvalidStream(std::size_t event_index, const AdmitResult& r)
      : std::runtime_error("event " + std::to_string(event_index) + " rejected (" + verdict_name(r.verdict) +
                           "): " + r.detail),
        event_index_(event_index),
        verdict_(r.verdict) {}
  std::size_t event_index() const { return event_index_; }
  AdmitVerdict verdict() const { return verdict_; }

 private:
  std::size_t event_index_;
  AdmitVerdict verdict_;
};

class InternalInvariantBreach : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Best description of σ on the living tree: shortest program, then smallest
/// use, then lexicographically least key.
struct LiveDescription {
  std::size_t pair_index = 0;
  std::size_t program_length = 0;
  BitString key;

  std::size_t use() const { return key.size(); }
  bool better_than(const LiveDescription& o) const {
    if (program_length != o.program_length) return program_length < o.program_length;
    if (key.size() != o.key.size()) return key.size() < o.key.size();
    return key < o.key;
  }
};

/// S_i wants ⟨σ, proposed_length⟩ because of the description in `witness`.
struct Attention {
  int requirement = 0;  // ladder index i of S_i
  BitString sigma;
  LiveDescription witness;
  std::size_t proposed_length = 0;
};

struct InjuryRecord {
  Stage stage = 0;
  std::size_t level = 0;  // i of the injured R_i (or family level)
  std::size_t n = 0;      // n_i at the injury stage
  int ladder_index = 0;   // c_i = ladder_value(ladder_index)
  BitString trigger_sigma;
  std::size_t trigger_use = 0;
  BitString alpha;  // chosen node at level n_i
  BitString gamma;  // chosen suffix
  DyadicMass m;        // mass kept on α·γ above α
  DyadicMass charged;  // Δ-mass already paid on living nodes above n_i
  int family = -1;     // function index e in universal runs
  friend bool operator==(const InjuryRecord&, const InjuryRecord&) = default;
};

enum class ActionCase { kIdle, kExtend, kRequest, kInjury };

inline const char* case_name(ActionCase c) {
  switch (c) {
    case ActionCase::kIdle: return "idle";
    case ActionCase::kExtend: return "extend";
    case ActionCase::kRequest: return "request";
    case ActionCase::kInjury: return "injury";
  }
  return "?";
}

struct StageRecord {
  Stage stage = 0;
  std::size_t admitted = 0;
  std::vector<ControlTransfer> transfers;
  ActionCase action = ActionCase::kIdle;
  char kind = '-';      // 'S' or 'R'
  int requirement = -1;  // i
  std::size_t n = 0;     // extend: new n_i
  std::optional<Request> request;
  std::optional<InjuryRecord> injury;
};

namespace detail {

/// Max over choice vectors of the mass of pairs consistent with it, leftmost
/// vector on ties. `keys`/`masses` describe pairs; levels are the branching
/// levels. Missing choices (no pair distinguishes them) are 0.
struct PathChoice {
  DyadicMass mass;
  BitString choices;
};

inline PathChoice best_path(const std::vector<const BitString*>& keys, const std::vector<DyadicMass>& masses,
                            const std::vector<std::size_t>& idx, const std::vector<std::size_t>& levels,
                            std::size_t j) {
  PathChoice out;
  if (idx.empty()) {
    out.choices = BitString::zeros(levels.size() - j);
    return out;
  }
  if (j == levels.size()) {
    for (auto p : idx) out.mass += masses[p];
    return out;
  }
  const std::size_t n = levels[j];
  std::vector<std::size_t> side[2];
  for (auto p : idx) {
    if (keys[p]->size() <= n) {
      out.mass += masses[p];
    } else {
      side[keys[p]->bit(n)].push_back(p);
    }
  }
  PathChoice left = best_path(keys, masses, side[0], levels, j + 1);
  PathChoice right = best_path(keys, masses, side[1], levels, j + 1);
  const bool take_right = right.mass > left.mass;
  PathChoice& pick = take_right ? right : left;
  out.mass += pick.mass;
  out.choices = BitString().with(take_right ? 1 : 0).concat(pick.choices);
  return out;
}

}  // namespace detail

/// The single-function construction: requirements S_0, R_0, S_1, R_1, ...,
/// at most one acting per stage.
class SingleEngine {
 public:
  SingleEngine(std::shared_ptr<const ApproximatedFunction> f, EngineParams params = {})
      : f_(std::move(f)), params_(params), injury_counts_(params.max_levels, 0) {
    for (Stage s : f_->change_stages()) change_stages_.insert(s);
  }

  /// Queues events for future stages; stages must be non-decreasing and not
  /// earlier than the next stage.
  void enqueue(const DescriptionEvent& e) {
    if (e.stage <= stage_) throw std::invalid_argument("enqueue: event stage already passed");
    if (!pending_.empty() && e.stage < pending_.back().stage) throw std::invalid_argument("enqueue: stages out of order");
    pending_.push_back(e);
  }
  void enqueue(const EventStream& s) {
    for (const auto& e : s.events) enqueue(e);
  }

  const StageRecord& step() {
    StageRecord rec;
    rec.stage = ++stage_;
    const Stage t = stage_;

    // Substage 1: enumeration, f̂, control.
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
    if (refresh) {
      for (const auto& sigma : monitored_) observe(sigma, t, rec);
    }
    while (monitored_.size() < want) {
      monitored_.push_back(length_lex_string(monitored_.size()));
      observe(monitored_.back(), t, rec);
    }
    bump(static_cast<std::size_t>(t));
    bump(tree_.max_length_ever());

    // Substage 2: the highest-priority requirement in the window acts.
    const std::size_t window = static_cast<std::size_t>(t) + 1;
    std::optional<Attention> s_att = s_attention(window);
    const std::size_t k = tree_.level_count();
    const bool r_wants = k < params_.max_levels && 2 * k + 1 < window;
    const std::size_t s_pos = s_att ? 2 * static_cast<std::size_t>(s_att->requirement) : SIZE_MAX;
    const std::size_t r_pos = r_wants ? 2 * k + 1 : SIZE_MAX;

    if (r_pos < s_pos) {
      const std::size_t n = max_seen_ + 1;
      tree_.extend(t, n);
      bump(tree_.leaf_length());
      rec.action = ActionCase::kExtend;
      rec.kind = 'R';
      rec.requirement = static_cast<int>(k);
      rec.n = n;
    } else if (s_att) {
      const int i = s_att->requirement;
      rec.kind = 'S';
      rec.requirement = i;
      const auto ui = static_cast<std::size_t>(i);
      if (ui < tree_.level_count() && s_att->witness.use() > tree_.levels()[ui]) {
        rec.action = ActionCase::kInjury;
        rec.injury = injure(ui, *s_att);
      } else {
        rec.action = ActionCase::kRequest;
        const auto& pair = enumeration_.pairs()[s_att->witness.pair_index];
        Request r{s_att->sigma, s_att->proposed_length, t, pair.key, pair.program, ladder_value(i)};
        requests_.append(r);
        latest_ladder_[s_att->witness.pair_index] = ladder_value(i);
        rec.request = r;
      }
    }
    check_invariants();
    records_.push_back(std::move(rec));
    return records_.back();
  }

  void run_until(Stage horizon) {
    while (stage_ < horizon) step();
  }

  /// S-attention among S_i with position 2i < window; the least such i, and
  /// for it the length-lex least σ.
  std::optional<Attention> s_attention(std::size_t window = SIZE_MAX) {
    refresh_live();
    std::optional<Attention> best;
    for (const auto& [sigma, desc] : live_) {
      if (length_lex_index(sigma) >= monitored_.size()) continue;
      auto idx = fhat_.index(sigma);
      if (!idx) continue;
      const int i = *idx;
      if (2 * static_cast<std::size_t>(i) >= window) continue;
      if (best && best->requirement <= i) continue;
      const std::size_t proposed = desc.program_length + static_cast<std::size_t>(ladder_value(i));
      auto current = requests_.min_length(sigma);
      if (current && proposed >= *current) continue;
      best = Attention{i, sigma, desc, proposed};
    }
    return best;
  }

  /// No requirement at all (ignoring the stage window) requires attention.
  bool quiescent() {
    if (tree_.level_count() < params_.max_levels) return false;
    return !s_attention();
  }

  Stage stage() const { return stage_; }
  const EngineParams& params() const { return params_; }
  const ApproximatedFunction& function() const { return *f_; }
  std::shared_ptr<const ApproximatedFunction> function_ptr() const { return f_; }
  const ConstructionTree& tree() const { return tree_; }
  const RequestSet& requests() const { return requests_; }
  const EnumerationState& enumeration() const { return enumeration_; }
  const FhatState& fhat() const { return fhat_; }
  const std::vector<BitString>& monitored() const { return monitored_; }
  const std::vector<std::size_t>& injury_counts() const { return injury_counts_; }
  const std::vector<StageRecord>& records() const { return records_; }
  const std::vector<DescriptionEvent>& admitted_events() const { return admitted_; }
  std::size_t pending_events() const { return pending_.size(); }
  std::vector<InjuryRecord> injuries() const {
    std::vector<InjuryRecord> out;
    for (const auto& r : records_) {
      if (r.injury) out.push_back(*r.injury);
    }
    return out;
  }
  std::optional<std::size_t> n(std::size_t i) const {
    if (i < tree_.level_count()) return tree_.levels()[i];
    return std::nullopt;
  }
  bool r_requires_attention(std::size_t i) const { return i < params_.max_levels && i >= tree_.level_count(); }

 private:
  void bump(std::size_t v) {
    if (v > max_seen_) max_seen_ = v;
  }

  void observe(const BitString& sigma, Stage t, StageRecord& rec) {
    if (auto tr = fhat_.observe(sigma, f_->value(sigma, t), t)) {
      if (tr->to > kMaxSupportedLadderIndex) {
        throw std::out_of_range("f-hat ladder index " + std::to_string(tr->to) + " for " + sigma.text() +
                                " exceeds the supported range");
      }
      rec.transfers.push_back(*tr);
    }
  }

  void refresh_live() {
    const auto& pairs = enumeration_.pairs();
    if (live_version_ != tree_.version()) {
      live_.clear();
      live_count_ = 0;
      live_version_ = tree_.version();
    }
    for (; live_count_ < pairs.size(); ++live_count_) {
      const auto& p = pairs[live_count_];
      if (!tree_.alive(p.key)) continue;
      LiveDescription d{live_count_, p.program.size(), p.key};
      auto it = live_.find(p.output);
      if (it == live_.end()) {
        live_.emplace(p.output, d);
      } else if (d.better_than(it->second)) {
        it->second = d;
      }
    }
  }

  InjuryRecord injure(std::size_t i, const Attention& att) {
    const std::size_t n = tree_.levels()[i];
    const auto& pairs = enumeration_.pairs();
    std::vector<const BitString*> keys;
    std::vector<DyadicMass> masses;
    std::vector<std::size_t> idx;
    DyadicMass charged;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& pair = pairs[p];
      if (pair.key.size() <= n || !tree_.alive(pair.key)) continue;
      idx.push_back(keys.size());
      keys.push_back(&pair.key);
      masses.push_back(pair.mass());
      auto it = latest_ladder_.find(p);
      if (it != latest_ladder_.end()) {
        charged += DyadicMass::inverse_power(static_cast<std::int64_t>(pair.program.size()) + it->second - 1);
      }
    }
    detail::PathChoice best = detail::best_path(keys, masses, idx, tree_.levels(), 0);
    BitString leaf = tree_.leaf_for(best.choices);
    InjuryRecord rec;
    rec.stage = stage_;
    rec.level = i;
    rec.n = n;
    rec.ladder_index = static_cast<int>(i);
    rec.trigger_sigma = att.sigma;
    rec.trigger_use = att.witness.use();
    rec.alpha = leaf.prefix(n);
    rec.gamma = leaf.suffix_from(n);
    rec.m = best.mass;
    rec.charged = charged;
    tree_.injure(stage_, i, rec.gamma);
    ++injury_counts_[i];
    return rec;
  }

  void check_invariants() const {
    const auto& lv = tree_.levels();
    for (std::size_t j = 0; j < lv.size(); ++j) {
      if (lv[j] >= tree_.leaf_length() || (j > 0 && lv[j] <= lv[j - 1])) {
        throw InternalInvariantBreach("branching levels out of order at stage " + std::to_string(stage_));
      }
    }
    if (lv.size() > params_.max_levels) throw InternalInvariantBreach("too many branching levels");
  }

  std::shared_ptr<const ApproximatedFunction> f_;
  EngineParams params_;
  std::set<Stage> change_stages_;
  Stage stage_ = 0;
  std::deque<DescriptionEvent> pending_;
  std::vector<DescriptionEvent> admitted_;
  std::size_t events_seen_ = 0;
  EnumerationState enumeration_;
  ConstructionTree tree_;
  FhatState fhat_;
  RequestSet requests_;
  std::vector<BitString> monitored_;
  std::vector<std::size_t> injury_counts_;
  std::vector<StageRecord> records_;
  std::map<std::size_t, std::int64_t> latest_ladder_;  // pair index -> c of its latest request
  std::map<BitString, LiveDescription, LengthLexLess> live_;
  std::uint64_t live_version_ = UINT64_MAX;
  std::size_t live_count_ = 0;
  std::size_t max_seen_ = 0;
};

/// Runs the construction to the horizon over a fixed event stream.
inline SingleEngine run_construction(std::shared_ptr<const ApproximatedFunction> f, const EventStream& stream,
                                     Stage horizon, EngineParams params = {}) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  SingleEngine engine(std::move(f), params);
  for (const auto& e : stream.events) {
    if (e.stage > horizon) break;
    engine.enqueue(e);
  }
  engine.run_until(horizon);
  return engine;
}

}  // namespace kcsim
