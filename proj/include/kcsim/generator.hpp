#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/oracle.hpp"
#include "kcsim/single_engine.hpp"
#include "kcsim/universal_engine.hpp"

namespace kcsim {

/// Knobs of the adversarial event generator. `pressure` is the probability
/// that an event is aimed above the branching level of the requirement that
/// controls its output; `stray` the probability of an off-tree oracle.
struct GeneratorProfile {
  Stage horizon = 200;
  std::size_t max_len = 8;
  double event_rate = 0.1;
  Stage event_stop = 0;  // 0: events may appear until the horizon
  std::size_t max_events = 40;
  double pressure = 0.0;
  bool injurious = false;
  std::size_t max_program = 10;
  double stray = 0.05;

  Stage last_event_stage() const { return event_stop > 0 && event_stop < horizon ? event_stop : horizon; }

  std::string text() const {
    auto num = [](double v) {
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, r.ptr);
    };
    std::ostringstream os;
    os << "horizon=" << horizon << " max_len=" << max_len << " rate=" << num(event_rate) << " stop=" << event_stop
       << " max_events=" << max_events << " pressure=" << num(pressure) << " injurious=" << (injurious ? 1 : 0)
       << " max_program=" << max_program << " stray=" << num(stray);
    return os.str();
  }

  /// Space-separated key=value pairs; unspecified keys keep their defaults.
  static GeneratorProfile parse(const std::string& text) {
    GeneratorProfile p;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("profile: expected key=value, got '" + tok + "'");
      const std::string k = tok.substr(0, eq);
      const std::string v = tok.substr(eq + 1);
      if (k == "horizon") {
        p.horizon = std::stoll(v);
      } else if (k == "max_len") {
        p.max_len = std::stoull(v);
      } else if (k == "rate") {
        p.event_rate = std::stod(v);
      } else if (k == "stop") {
        p.event_stop = std::stoll(v);
      } else if (k == "max_events") {
        p.max_events = std::stoull(v);
      } else if (k == "pressure") {
        p.pressure = std::stod(v);
      } else if (k == "injurious") {
        p.injurious = v == "1" || v == "true";
      } else if (k == "max_program") {
        p.max_program = std::stoull(v);
      } else if (k == "stray") {
        p.stray = std::stod(v);
      } else {
        throw std::invalid_argument("profile: unknown key '" + k + "'");
      }
    }
    if (p.horizon < 1) throw std::invalid_argument("profile: horizon must be >= 1");
    if (p.max_program < 1) throw std::invalid_argument("profile: max_program must be >= 1");
    if (p.event_rate < 0 || p.event_rate > 1 || p.pressure < 0 || p.pressure > 1 || p.stray < 0 || p.stray > 1) {
      throw std::invalid_argument("profile: probabilities must lie in [0,1]");
    }
    return p;
  }
};

/// What an event for sigma on a given leaf would be measured against.
struct EventTarget {
  bool controlled = false;             // some S requirement controls sigma there
  std::optional<std::size_t> level;    // n_i of the controlling requirement, if set
  std::size_t ladder = 0;              // c_i
  std::optional<std::size_t> best;     // shortest request for sigma so far
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : gen_() % n; }
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  BitString bits(std::size_t n) {
    BitString b;
    for (std::size_t i = 0; i < n; ++i) b.push_back(static_cast<int>(gen_() & 1));
    return b;
  }

 private:
  std::mt19937_64 gen_;
};

namespace detail {

class SingleTargetAdapter {
 public:
  explicit SingleTargetAdapter(SingleEngine& e) : e_(e) {}
  const std::vector<BitString>& monitored() const { return e_.monitored(); }
  BitString random_leaf(Rng& rng) const {
    return e_.tree().leaf_for(rng.bits(e_.tree().level_count()));
  }
  EventTarget target(const BitString& sigma, const BitString&, Rng&) const {
    EventTarget t;
    auto idx = e_.fhat().index(sigma);
    if (!idx) return t;
    t.controlled = true;
    t.level = e_.n(static_cast<std::size_t>(*idx));
    t.ladder = static_cast<std::size_t>(ladder_value(*idx));
    t.best = e_.requests().min_length(sigma);
    return t;
  }
  void enqueue(const DescriptionEvent& ev) { e_.enqueue(ev); }
  void step() { e_.step(); }
  std::size_t injuries() const {
    std::size_t n = 0;
    for (auto c : e_.injury_counts()) n += c;
    return n;
  }

 private:
  SingleEngine& e_;
};

class UniversalTargetAdapter {
 public:
  explicit UniversalTargetAdapter(UniversalEngine& e) : e_(e) {}
  const std::vector<BitString>& monitored() const { return e_.monitored(); }
  BitString random_leaf(Rng& rng) const {
    const auto& leaves = e_.leaves();
    return leaves[rng.below(leaves.size())].node;
  }
  EventTarget target(const BitString& sigma, const BitString& leaf, Rng& rng) const {
    const BitString eta = e_.choices_of(leaf);
    std::vector<std::size_t> options;
    for (std::size_t e = 0; e < e_.function_count(); ++e) {
      auto idx = e_.fhat(e).index(sigma);
      if (!idx || static_cast<std::size_t>(*idx) < 2 * e + 1) continue;
      if (eta.size() > 2 * e && eta.bit(2 * e) != 1) continue;
      options.push_back(e);
    }
    EventTarget t;
    if (options.empty()) return t;
    const std::size_t e = options[rng.below(options.size())];
    const auto i = static_cast<std::size_t>(*e_.fhat(e).index(sigma));
    t.controlled = true;
    if (eta.size() > i) t.level = e_.level(ClassKey{i, even_bits(eta.prefix(i))});
    t.ladder = static_cast<std::size_t>(ladder_value(static_cast<int>(i)));
    t.best = e_.requests(e).min_length(sigma);
    return t;
  }
  void enqueue(const DescriptionEvent& ev) { e_.enqueue(ev); }
  void step() { e_.step(); }
  std::size_t injuries() const { return e_.injuries().size(); }

 private:
  UniversalEngine& e_;
};

/// Tries to build one admissible event for stage t. `aim_high` asks for a use
/// above the controlling branching level.
template <class Adapter>
std::optional<DescriptionEvent> propose_event(Adapter& a, EnumerationState& shadow, Rng& rng,
                                              const GeneratorProfile& p, Stage t, bool aim_high) {
  std::vector<BitString> pool;
  for (const auto& s : a.monitored()) {
    if (s.size() <= p.max_len) pool.push_back(s);
  }
  if (pool.empty()) pool.push_back(BitString());
  for (int attempt = 0; attempt < 8; ++attempt) {
    const BitString sigma = pool[rng.below(pool.size())];
    BitString oracle;
    std::size_t use = 1;
    std::size_t lo = 1;
    std::size_t hi = p.max_program;
    if (!aim_high && rng.chance(p.stray)) {
      oracle = rng.bits(rng.between(1, 12));
      use = rng.between(1, oracle.size());
    } else {
      const BitString leaf = a.random_leaf(rng);
      const EventTarget tg = a.target(sigma, leaf, rng);
      if (aim_high) {
        if (!tg.controlled || !tg.level || *tg.level >= leaf.size()) continue;
        if (tg.best) {
          if (*tg.best <= tg.ladder + 1) continue;
          hi = std::min(hi, *tg.best - tg.ladder - 1);
        }
        oracle = leaf.concat(rng.bits(rng.below(3)));
        use = rng.between(*tg.level + 1, leaf.size());
      } else {
        oracle = leaf.concat(rng.bits(leaf.empty() ? 1 + rng.below(2) : rng.below(3)));
        std::size_t cap = leaf.empty() ? oracle.size() : leaf.size();
        if (tg.controlled && tg.level) cap = std::min(cap, *tg.level);
        use = rng.between(1, std::max<std::size_t>(cap, 1));
      }
    }
    std::size_t len = rng.between(lo, hi);
    for (int retry = 0; retry < 20; ++retry) {
      DescriptionEvent ev{t, oracle, rng.bits(len), sigma, use};
      AdmitResult r = shadow.check(ev);
      if (r.verdict == AdmitVerdict::kAccepted) return ev;
      // shrink the event: a longer program weighs less and clashes less
      if (r.verdict == AdmitVerdict::kMassOverflow || retry % 3 == 2) ++len;
      if (len > p.max_program + 8) break;
    }
  }
  return std::nullopt;
}

template <class Adapter>
EventStream generate_closed_loop(Adapter a, std::uint64_t seed, const GeneratorProfile& p) {
  Rng rng(seed);
  EnumerationState shadow;
  EventStream out;
  {
    std::ostringstream prov;
    prov << "seed=" << seed << ' ' << p.text();
    out.provenance = prov.str();
  }
  bool aimed = false;
  const Stage stop = p.last_event_stage();
  for (Stage t = 1; t <= p.horizon; ++t) {
    if (t <= stop && out.events.size() < p.max_events) {
      const bool force = p.injurious && !aimed && t > 3;
      if (force || rng.chance(p.event_rate)) {
        const bool high = force || rng.chance(p.pressure);
        auto ev = propose_event(a, shadow, rng, p, t, high);
        if (ev) {
          shadow.admit(*ev);
          a.enqueue(*ev);
          out.events.push_back(*ev);
          if (high) aimed = true;
        }
      }
    }
    a.step();
  }
  return out;
}

}  // namespace detail

/// Closed-loop adversarial stream for the single-function construction: the
/// engine runs alongside so events can be aimed at the current tree. The same
/// seed, profile, function and parameters always give the same stream.
inline EventStream generate_adversarial_stream(std::uint64_t seed, const GeneratorProfile& p,
                                               std::shared_ptr<const ApproximatedFunction> f,
                                               EngineParams params = {}) {
  SingleEngine engine(std::move(f), params);
  return detail::generate_closed_loop(detail::SingleTargetAdapter(engine), seed, p);
}

inline EventStream generate_universal_stream(std::uint64_t seed, const GeneratorProfile& p,
                                             std::vector<std::shared_ptr<const ApproximatedFunction>> phis,
                                             UniversalParams params = {}) {
  UniversalEngine engine(std::move(phis), params);
  return detail::generate_closed_loop(detail::UniversalTargetAdapter(engine), seed, p);
}

}  // namespace kcsim
