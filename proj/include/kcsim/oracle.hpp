#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "kcsim/bitstring.hpp"
#include "kcsim/dyadic.hpp"

namespace kcsim {

using Stage = std::int64_t;

/// One convergence U_s^oracle(program) = output, having consulted the first
/// `use` bits of the oracle.
struct DescriptionEvent {
  Stage stage = 1;
  BitString oracle;
  BitString program;
  BitString output;
  std::size_t use = 1;

  /// Exact-pair key: the oracle cut down to its use.
  BitString key() const { return oracle.prefix(use); }
  DyadicMass mass() const { return DyadicMass::inverse_power(static_cast<std::int64_t>(program.size())); }

  friend bool operator==(const DescriptionEvent&, const DescriptionEvent&) = default;
};

/// An admitted event in exact-pair normal form (oracle == key, use == |key|).
struct ExactPair {
  Stage stage = 0;
  BitString key;
  BitString program;
  BitString output;

  std::size_t use() const { return key.size(); }
  DyadicMass mass() const { return DyadicMass::inverse_power(static_cast<std::int64_t>(program.size())); }
  friend bool operator==(const ExactPair&, const ExactPair&) = default;
};

/// Minimal description lengths K^alpha(sigma), relativized to finite oracles.
/// kOf(alpha, sigma) = min length over entries whose oracle is a prefix of alpha.
class ComplexityTable {
 public:
  void record(const BitString& oracle, const BitString& target, std::size_t length) {
    auto& rows = rows_[target];
    for (auto& r : rows) {
      if (r.oracle == oracle) {
        if (length < r.length) r.length = length;
        return;
      }
    }
    rows.push_back({oracle, length});
  }

  /// nullopt plays the role of "no description yet" (+infinity in comparisons).
  std::optional<std::size_t> k_of(const BitString& alpha, const BitString& target) const {
    auto it = rows_.find(target);
    if (it == rows_.end()) return std::nullopt;
    std::optional<std::size_t> best;
    for (const auto& r : it->second) {
      if (r.oracle.is_prefix_of(alpha) && (!best || r.length < *best)) best = r.length;
    }
    return best;
  }

  /// Unrelativized row (oracle = empty string).
  std::optional<std::size_t> k_plain(const BitString& target) const { return k_of(BitString(), target); }

  std::vector<BitString> targets() const {
    std::vector<BitString> out;
    out.reserve(rows_.size());
    for (const auto& [t, _] : rows_) out.push_back(t);
    return out;
  }

 private:
  struct Row {
    BitString oracle;
    std::size_t length;
  };
  std::map<BitString, std::vector<Row>> rows_;
};

enum class AdmitVerdict { kAccepted, kDuplicate, kMalformed, kPrefixClash, kMassOverflow, kPersistenceViolation };

inline const char* verdict_name(AdmitVerdict v) {
  switch (v) {
    case AdmitVerdict::kAccepted: return "accepted";
    case AdmitVerdict::kDuplicate: return "duplicate";
    case AdmitVerdict::kMalformed: return "malformed";
    case AdmitVerdict::kPrefixClash: return "prefix-clash";
    case AdmitVerdict::kMassOverflow: return "mass-overflow";
    case AdmitVerdict::kPersistenceViolation: return "persistence-violation";
  }
  return "?";
}

struct AdmitResult {
  AdmitVerdict verdict = AdmitVerdict::kAccepted;
  std::string detail;

  bool ok() const { return verdict == AdmitVerdict::kAccepted || verdict == AdmitVerdict::kDuplicate; }
};

/// The enumeration of the oracle machine as seen so far. Enforces the machine
/// conventions on admission: per-path prefix-free domain, per-path mass <= 1,
/// persistence of outputs.
class EnumerationState {
 public:
  /// Checks an event against the conventions without admitting it.
  AdmitResult check(const DescriptionEvent& e) const {
    if (e.stage < 1 || e.use < 1 || e.use > e.oracle.size()) {
      return {AdmitVerdict::kMalformed, "use must satisfy 1 <= use <= |oracle| and stage >= 1"};
    }
    const BitString key = e.key();
    DyadicMass through_key;   // mass of pairs with key' ⪯ key
    DyadicMass deepest_above;  // max path mass among keys strictly extending key
    for (const auto& p : pairs_) {
      bool below = p.key.is_prefix_of(key);
      bool above = !below && key.is_prefix_of(p.key);
      if (!below && !above) continue;
      if (p.program == e.program) {
        if (p.output != e.output) {
          return {AdmitVerdict::kPersistenceViolation,
                  "program " + e.program.text() + " already outputs " + p.output.text() + " on " + p.key.text()};
        }
        if (below) return {AdmitVerdict::kDuplicate, "already converged on " + p.key.text()};
        return {AdmitVerdict::kPrefixClash, "same program converges on longer use " + p.key.text()};
      }
      if (p.program.comparable(e.program)) {
        return {AdmitVerdict::kPrefixClash,
                "program " + e.program.text() + " comparable with " + p.program.text() + " on " + p.key.text()};
      }
      if (below) through_key += p.mass();
    }
    for (const auto& [k, info] : keys_) {
      if (k.size() > key.size() && key.is_prefix_of(k) && info.path_mass > deepest_above) deepest_above = info.path_mass;
    }
    DyadicMass worst = deepest_above > through_key ? deepest_above : through_key;
    if (worst + e.mass() > DyadicMass::one()) {
      return {AdmitVerdict::kMassOverflow, "path mass " + worst.to_string() + " + " + e.mass().to_string() + " > 1"};
    }
    return {};
  }

  AdmitResult admit(const DescriptionEvent& e) {
    AdmitResult r = check(e);
    if (r.verdict != AdmitVerdict::kAccepted) return r;
    ExactPair p{e.stage, e.key(), e.program, e.output};
    const DyadicMass m = p.mass();
    DyadicMass own_path;
    for (auto& [k, info] : keys_) {
      if (p.key.is_prefix_of(k)) info.path_mass += m;
      if (k.size() < p.key.size() && k.is_prefix_of(p.key)) own_path += info.own_mass;
    }
    auto [it, inserted] = keys_.try_emplace(p.key);
    if (inserted) it->second.path_mass = own_path + m;
    it->second.own_mass += m;
    table_.record(p.key, p.output, p.program.size());
    pairs_.push_back(std::move(p));
    return r;
  }

  const std::vector<ExactPair>& pairs() const { return pairs_; }
  const ComplexityTable& table() const { return table_; }

  /// Σ 2^-|τ| over pairs whose key is a prefix of beta.
  DyadicMass path_mass(const BitString& beta) const {
    DyadicMass m;
    for (const auto& p : pairs_) {
      if (p.key.is_prefix_of(beta)) m += p.mass();
    }
    return m;
  }

  /// Line-oriented dump of the admitted pairs; equal states give equal text.
  std::string serialize() const {
    std::ostringstream os;
    for (const auto& p : pairs_) {
      os << p.stage << ' ' << p.key.text() << ' ' << p.program.text() << ' ' << p.output.text() << '\n';
    }
    return os.str();
  }

 private:
  struct KeyInfo {
    DyadicMass own_mass;   // pairs with exactly this key
    DyadicMass path_mass;  // pairs with key ⪯ this key
  };
  std::vector<ExactPair> pairs_;
  std::unordered_map<BitString, KeyInfo> keys_;
  ComplexityTable table_;
};

/// A finite event sequence in admission order, with provenance.
struct EventStream {
  std::string provenance;  // free text carried in the header line
  std::vector<DescriptionEvent> events;

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr const char* kStreamMagic = "kcsim-stream";
inline constexpr int kStreamVersion = 1;

inline std::string format_event(const DescriptionEvent& e) {
  std::ostringstream os;
  os << e.stage << ' ' << e.oracle.text() << ' ' << e.program.text() << ' ' << e.output.text() << ' ' << e.use;
  return os.str();
}

inline DescriptionEvent parse_event(const std::string& line, std::size_t line_no) {
  std::istringstream is(line);
  std::string stage, oracle, program, output, use, extra;
  if (!(is >> stage >> oracle >> program >> output >> use) || (is >> extra)) {
    throw FormatError(line_no, "expected 5 fields: stage oracle program output use");
  }
  DescriptionEvent e;
  try {
    std::size_t pos = 0;
    e.stage = std::stoll(stage, &pos);
    if (pos != stage.size()) throw std::invalid_argument("stage");
    e.use = static_cast<std::size_t>(std::stoull(use, &pos));
    if (pos != use.size()) throw std::invalid_argument("use");
    e.oracle = BitString::from_text(oracle);
    e.program = BitString::from_text(program);
    e.output = BitString::from_text(output);
  } catch (const std::exception& ex) {
    throw FormatError(line_no, std::string("bad field: ") + ex.what());
  }
  if (e.stage < 1 || e.use < 1 || e.use > e.oracle.size()) {
    throw FormatError(line_no, "use must satisfy 1 <= use <= |oracle| and stage >= 1");
  }
  return e;
}

inline void write_stream(std::ostream& os, const EventStream& s) {
  os << kStreamMagic << ' ' << kStreamVersion << ' ' << s.provenance << '\n';
  for (const auto& e : s.events) os << format_event(e) << '\n';
}

/// Parses a stream file. Lines are numbered from 1 (the header).
/// Event stages must be non-decreasing.
inline EventStream read_stream(std::istream& is) {
  EventStream s;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw FormatError(1, "missing header");
  ++line_no;
  {
    std::istringstream hs(line);
    std::string magic;
    int version = 0;
    if (!(hs >> magic >> version) || magic != kStreamMagic) throw FormatError(1, "bad header");
    if (version != kStreamVersion) throw FormatError(1, "unsupported version " + std::to_string(version));
    std::getline(hs >> std::ws, s.provenance);
  }
  Stage last = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) throw FormatError(line_no, "empty line");
    DescriptionEvent e = parse_event(line, line_no);
    if (e.stage < last) throw FormatError(line_no, "stages must be non-decreasing");
    last = e.stage;
    s.events.push_back(std::move(e));
  }
  return s;
}

}  // namespace kcsim
