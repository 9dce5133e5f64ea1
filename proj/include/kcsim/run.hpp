#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "kcsim/analysis/coding.hpp"
#include "kcsim/analysis/dimension.hpp"
#include "kcsim/analysis/inequality.hpp"
#include "kcsim/analysis/injury.hpp"
#include "kcsim/analysis/mass.hpp"
#include "kcsim/analysis/report.hpp"
#include "kcsim/config.hpp"
#include "kcsim/generator.hpp"
#include "kcsim/kraft_chaitin.hpp"
#include "kcsim/single_engine.hpp"
#include "kcsim/universal_engine.hpp"

namespace kcsim {

inline constexpr const char* kTraceMagic = "kcsim-trace 1";

/// Living nodes of exactly this length, counted by walking the tree with
/// membership queries only. Stops counting at `limit`.
inline std::uint64_t count_living_at(const ConstructionTree& tree, std::size_t length, std::uint64_t limit) {
  std::uint64_t count = 0;
  std::vector<BitString> stack{BitString()};
  if (!tree.alive(BitString())) return 0;
  while (!stack.empty() && count < limit) {
    BitString x = std::move(stack.back());
    stack.pop_back();
    if (x.size() == length) {
      ++count;
      continue;
    }
    for (int b = 1; b >= 0; --b) {
      BitString y = x.with(b);
      if (tree.alive(y)) stack.push_back(std::move(y));
    }
  }
  return count;
}

/// The verification suite for a finished single-function run.
inline Report analyze_single(const SingleEngine& engine, const RunConfig& cfg) {
  Report r;
  const auto& pairs = engine.enumeration().pairs();
  const auto& L = engine.requests();
  const auto& tree = engine.tree();
  AccountingInput in{&pairs, &L.requests(), [&](const BitString& x) { return tree.alive(x); },
                     [&](const BitString& x) { return tree.choices_of(x); }};
  const MassDecomposition d = decompose_mass(in);
  r.add(verify_mass_bounds(d, L.requests(), cfg.shift));
  r.add(verify_ledger(L));
  r.add(verify_injury_charge(engine.injuries()));
  if (tree.level_count() <= 12) r.add(audit_single_injuries(engine));
  r.add(verify_ladder_inequality(20, 20));
  const bool quiet = const_cast<SingleEngine&>(engine).quiescent();
  r.add(Check{"quiescent", true, "-", quiet ? "yes" : "no"});
  if (quiet && tree.level_count() <= 16) {
    r.add(verify_main_inequality(engine, cfg.shift));
  } else {
    r.add(Check{"main_inequality", true, "-", "skipped"});
  }
  {
    std::size_t bad = 0;
    std::string where;
    for (std::size_t i = 0; i < tree.level_count() && i <= 12; ++i) {
      const std::uint64_t want = std::uint64_t{1} << i;
      const std::uint64_t got = count_living_at(tree, tree.levels()[i], want + 1);
      if (got != want && bad++ == 0) where = " first level " + std::to_string(i) + " has " + std::to_string(got);
    }
    r.add(Check{"branching_count", bad == 0, "-",
                std::to_string(std::min<std::size_t>(tree.level_count(), 13)) + " levels" + where});
  }
  {
    Rng rng(cfg.seed ^ 0x5eedc0deULL);
    const BitString target = rng.bits(std::min<std::size_t>(tree.level_count(), 32));
    const CodingJoin j = coding_join(tree, target);
    r.add(Check{"coding_join", j.reconstruction == target, "-", "target " + target.text()});
  }
  return r;
}

/// The verification suite for a universal run: per-function accounting, T*.
inline Report analyze_universal(UniversalEngine& engine, const RunConfig& cfg) {
  Report r;
  const auto truth = cfg.truth();
  const auto& pairs = engine.enumeration().pairs();
  const TStar ts = extract_tstar(engine, truth);
  const bool quiet = engine.quiescent_for(truth);
  r.add(Check{"quiescent", true, "-", quiet ? "yes" : "no"});
  r.add(Check{"tstar_perfect", ts.perfect && !ts.leaves.empty(), "-",
              "settled=" + std::to_string(ts.settled_depth) + " doubled_odd=" + std::to_string(ts.perfection_depth) +
                  " leaves=" + std::to_string(ts.leaves.size())});
  const auto injuries = engine.injuries();
  for (std::size_t e = 0; e < engine.function_count(); ++e) {
    const auto& L = engine.requests(e);
    AccountingInput in{&pairs, &L.requests(), [&](const BitString& x) { return engine.alive(x); },
                       [&](const BitString& x) { return engine.choices_of(x); }};
    const std::string prefix = "e" + std::to_string(e) + ".";
    r.add_prefixed(prefix, verify_mass_bounds(decompose_mass(in), L.requests(), cfg.shift));
    Report led;
    led.add(verify_ledger(L));
    r.add_prefixed(prefix, led);
    std::vector<InjuryRecord> mine;
    for (const auto& inj : injuries) {
      if (inj.family == static_cast<int>(e)) mine.push_back(inj);
    }
    r.add_prefixed(prefix, verify_injury_charge(mine));
    if (truth[e] && quiet) {
      Report m;
      m.add(verify_main_inequality(engine, e, ts.leaves, cfg.shift));
      r.add_prefixed(prefix, m);
    }
  }
  {
    // injuries to correctly guessing R requirements
    std::size_t count = 0;
    Stage last = 0;
    for (const auto& [cls, n] : engine.injury_counts()) {
      bool correct = true;
      for (std::size_t j = 0; j < cls.guesses.size(); ++j) {
        const int want = j < truth.size() && truth[j] ? 1 : 0;
        if (cls.guesses.bit(j) != want) correct = false;
      }
      if (!correct) continue;
      count += n;
      last = std::max(last, engine.last_injury().at(cls));
    }
    r.add(Check{"correct_guess_injuries", true, "-",
                std::to_string(count) + " injuries, last at stage " + std::to_string(last)});
  }
  return r;
}

namespace detail {

inline std::string single_action_text(const StageRecord& s) {
  std::ostringstream os;
  os << "act=" << case_name(s.action);
  if (s.action == ActionCase::kIdle) return os.str();
  os << ' ' << s.kind << s.requirement;
  if (s.action == ActionCase::kExtend) os << " n=" << s.n;
  if (s.request) {
    const auto& q = *s.request;
    os << " sigma=" << q.target.text() << " len=" << q.length << " c=" << q.ladder_value << " key=" << q.origin_key.text()
       << " prog=" << q.origin_program.text();
  }
  if (s.injury) {
    const auto& j = *s.injury;
    os << " level=" << j.level << " n=" << j.n << " sigma=" << j.trigger_sigma.text() << " use=" << j.trigger_use
       << " alpha=" << j.alpha.text() << " gamma=" << j.gamma.text() << " m=" << j.m << " charged=" << j.charged;
  }
  return os.str();
}

inline std::string universal_action_text(const UniversalAction& a) {
  std::ostringstream os;
  os << "act=" << case_name(a.action) << ' ' << a.who.text();
  if (a.action == ActionCase::kExtend) os << " class=" << a.cls.text() << " n=" << a.n;
  if (a.request) {
    const auto& q = *a.request;
    os << " sigma=" << q.target.text() << " len=" << q.length << " c=" << q.ladder_value << " key=" << q.origin_key.text()
       << " prog=" << q.origin_program.text();
  }
  if (a.injury) {
    const auto& j = *a.injury;
    os << " class=" << a.cls.text() << " n=" << j.n << " sigma=" << j.trigger_sigma.text() << " use=" << j.trigger_use
       << " alpha=" << j.alpha.text() << " gamma=" << j.gamma.text() << " m=" << j.m << " charged=" << j.charged;
  }
  return os.str();
}

inline std::string request_line(std::size_t e, std::size_t k, const Request& q) {
  std::ostringstream os;
  os << "request " << e << ' ' << k << ' ' << q.target.text() << ' ' << q.length << ' ' << q.stage << ' '
     << q.origin_key.text() << ' ' << q.origin_program.text() << ' ' << q.ladder_value;
  return os.str();
}

inline std::uint64_t fnv1a(const std::vector<std::string>& lines) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : lines) {
    for (unsigned char c : l) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= '\n';
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace detail

struct RunArtifacts {
  RunConfig config;
  EventStream stream;
  std::vector<std::string> trace;  // ends with the digest line
  Report report;
  std::string requests_log;
  std::string code_dump;
  bool quiescent = false;
};

/// The stream a config asks for: generated in closed loop, or read from a file.
inline EventStream obtain_stream(const RunConfig& cfg) {
  if (cfg.stream != "generate") {
    std::ifstream in(cfg.stream);
    if (!in) throw ConfigError(0, "cannot open stream file '" + cfg.stream + "'");
    EventStream s = read_stream(in);
    // admissibility is checked up front so a bad file is reported by line
    EnumerationState shadow;
    for (std::size_t k = 0; k < s.events.size(); ++k) {
      AdmitResult r = shadow.check(s.events[k]);
      if (!r.ok()) throw FormatError(k + 2, std::string(verdict_name(r.verdict)) + ": " + r.detail);
      shadow.admit(s.events[k]);
    }
    return s;
  }
  GeneratorProfile p = cfg.profile;
  p.horizon = cfg.horizon;
  switch (cfg.mode) {
    case RunMode::kUniversal:
      return generate_universal_stream(cfg.seed, p, cfg.universal_functions(), cfg.universal_params());
    default:
      return generate_adversarial_stream(cfg.seed, p, cfg.single_function(), cfg.engine_params());
  }
}

/// Runs the configured engine over `stream` and the full analysis suite.
inline RunArtifacts execute(const RunConfig& cfg, const EventStream& stream) {
  cfg.validate();
  RunArtifacts out;
  out.config = cfg;
  out.stream = stream;
  auto& tr = out.trace;
  tr.push_back(kTraceMagic);
  // where artifacts land is not part of the run
  for (const auto& l : cfg.lines()) {
    if (l.rfind("output = ", 0) != 0) tr.push_back("config " + l);
  }
  tr.push_back("provenance " + stream.provenance);
  for (const auto& e : stream.events) tr.push_back("event " + format_event(e));
  std::ostringstream reqlog;
  std::ostringstream code;

  if (cfg.mode == RunMode::kUniversal) {
    UniversalEngine engine(cfg.universal_functions(), cfg.universal_params());
    for (const auto& e : stream.events) {
      if (e.stage <= cfg.horizon) engine.enqueue(e);
    }
    for (Stage t = 1; t <= cfg.horizon; ++t) {
      const auto& rec = engine.step();
      std::ostringstream os;
      os << "stage " << rec.stage << " admitted=" << rec.admitted << " transfers=" << rec.transfers.size();
      if (rec.actions.empty()) os << " act=idle";
      for (const auto& a : rec.actions) os << " | " << detail::universal_action_text(a);
      tr.push_back(os.str());
    }
    for (std::size_t e = 0; e < engine.function_count(); ++e) {
      reqlog << "# L_" << e << '\n';
      const auto& reqs = engine.requests(e).requests();
      for (std::size_t k = 0; k < reqs.size(); ++k) {
        tr.push_back(detail::request_line(e, k, reqs[k]));
        reqlog << detail::request_line(e, k, reqs[k]) << '\n';
      }
      code << "# L_" << e << '\n';
      build_prefix_code(engine.requests(e), cfg.shift).dump(code);
    }
    for (const auto& [k, n] : engine.levels()) tr.push_back("level " + k.text() + " " + std::to_string(n));
    for (const auto& l : engine.leaves()) tr.push_back("leaf " + l.node.text() + " " + l.eta.text());
    out.report = analyze_universal(engine, cfg);
    out.quiescent = engine.quiescent_for(cfg.truth());
  } else {
    auto f = cfg.single_function();
    SingleEngine engine(f, cfg.engine_params());
    for (const auto& e : stream.events) {
      if (e.stage <= cfg.horizon) engine.enqueue(e);
    }
    for (Stage t = 1; t <= cfg.horizon; ++t) {
      const auto& rec = engine.step();
      std::ostringstream os;
      os << "stage " << rec.stage << " admitted=" << rec.admitted << " transfers=" << rec.transfers.size() << ' '
         << detail::single_action_text(rec);
      tr.push_back(os.str());
    }
    const auto& reqs = engine.requests().requests();
    for (std::size_t k = 0; k < reqs.size(); ++k) {
      tr.push_back(detail::request_line(0, k, reqs[k]));
      reqlog << detail::request_line(0, k, reqs[k]) << '\n';
    }
    build_prefix_code(engine.requests(), cfg.shift).dump(code);
    {
      std::ostringstream os;
      os << "levels";
      for (auto n : engine.tree().levels()) os << ' ' << n;
      tr.push_back(os.str());
      tr.push_back("template " + engine.tree().template_leaf().text());
    }
    out.report = analyze_single(engine, cfg);
    out.quiescent = engine.quiescent();
    if (cfg.mode == RunMode::kDimension) {
      if (out.quiescent) {
        auto samples = pick_dimension_samples(engine, cfg.samples, cfg.seed);
        DimensionResult dr = dimension_check(engine, samples, cfg.shift);
        out.report.add(dr.report);
        for (const auto& row : dr.rows) {
          tr.push_back("dimension n=" + std::to_string(row.n) + " log=" + row.log_term() + " K=" + std::to_string(row.k) +
                       " KA=" + std::to_string(row.k_rel) + " Kany=" + std::to_string(row.k_any) +
                       " left_slack=" + std::to_string(row.left_slack) + " right_slack=" + std::to_string(row.right_slack));
        }
      } else {
        out.report.add(Check{"dimension", true, "-", "skipped: not quiescent"});
      }
    }
  }
  for (const auto& c : out.report.checks()) {
    std::ostringstream os;
    Report one;
    one.add(c);
    one.write(os);
    std::string line = os.str();
    line.pop_back();
    tr.push_back(line);
  }
  tr.push_back("digest " + detail::hex(detail::fnv1a(tr)));
  out.requests_log = reqlog.str();
  out.code_dump = code.str();
  return out;
}

inline RunArtifacts run_config(const RunConfig& cfg) { return execute(cfg, obtain_stream(cfg)); }

struct VerifyOutcome {
  Report report;  // regenerated analysis report
  Report audit;   // trace agreement checks
  bool ok() const { return report.ok() && audit.ok(); }
};

/// Re-runs the engine on the config and events recorded in a trace and
/// compares the regenerated trace line by line. Empty input verifies trivially.
inline VerifyOutcome verify_trace(const std::vector<std::string>& lines) {
  VerifyOutcome out;
  if (lines.empty()) return out;
  if (lines[0] != kTraceMagic) throw FormatError(1, "not a trace file");
  RunConfig cfg;
  EventStream stream;
  Stage last = 0;
  bool have_digest = false;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::string& l = lines[k];
    const std::size_t no = k + 1;
    if (l.rfind("config ", 0) == 0) {
      const std::string body = l.substr(7);
      auto eq = body.find(" = ");
      if (eq == std::string::npos) throw FormatError(no, "bad config line");
      cfg.set(body.substr(0, eq), body.substr(eq + 3), no);
    } else if (l.rfind("provenance ", 0) == 0 || l == "provenance") {
      stream.provenance = l.size() > 11 ? l.substr(11) : "";
    } else if (l.rfind("event ", 0) == 0) {
      DescriptionEvent e = parse_event(l.substr(6), no);
      if (e.stage < last) throw FormatError(no, "event stages must be non-decreasing");
      last = e.stage;
      stream.events.push_back(std::move(e));
    } else if (l.rfind("digest ", 0) == 0) {
      if (k + 1 != lines.size()) throw FormatError(no, "digest must be the last line");
      have_digest = true;
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(1, e.what());
  }
  RunArtifacts again = execute(cfg, stream);
  out.report = again.report;
  std::size_t first = 0;
  const std::size_t n = std::max(lines.size(), again.trace.size());
  for (std::size_t k = 0; k < n; ++k) {
    const bool same = k < lines.size() && k < again.trace.size() && lines[k] == again.trace[k];
    if (!same) {
      first = k + 1;
      break;
    }
  }
  out.audit.add(Check{"trace_match", first == 0, "-",
                      first == 0 ? std::to_string(lines.size()) + " lines"
                                 : "first difference at line " + std::to_string(first)});
  std::vector<std::string> body(lines.begin(), lines.end() - (have_digest ? 1 : 0));
  const std::string want = "digest " + detail::hex(detail::fnv1a(body));
  out.audit.add(Check{"digest", have_digest && lines.back() == want, "-", have_digest ? lines.back() : "missing"});
  return out;
}

}  // namespace kcsim
