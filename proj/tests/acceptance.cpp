// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
#include <boost/multiprecision/cpp_int.hpp>
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "kcsim/run.hpp"
#include "reference_engine.hpp"
#include "trace_mutation.hpp"

using namespace kcsim;
using Rational = boost::multiprecision::cpp_rational;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string first_problem;

  void fail(const std::string& why) {
    if (pass) first_problem = why;
    pass = false;
  }
};

Rational as_rational(const DyadicMass& m) {
  return Rational(m.numerator()) / Rational(BigInt(1) << static_cast<unsigned>(m.exponent()));
}

Rational pow2_neg(std::int64_t k) {
  return k >= 0 ? Rational(1) / Rational(BigInt(1) << static_cast<unsigned>(k))
                : Rational(BigInt(1) << static_cast<unsigned>(-k));
}

std::shared_ptr<const ApproximatedFunction> fn(const std::string& spec) {
  return std::make_shared<ScheduleFunction>(ScheduleFunction::parse(spec));
}

std::vector<std::shared_ptr<const ApproximatedFunction>> three_phis() {
  return {fn("p0 f2o=1 default=linear:4:0"), fn("p1 f2o=0 default=const:70"), fn("p2 f2o=1 default=linear:200:0")};
}
const std::vector<bool> kTruth{true, false, true};

// Lambda and Delta straight from the logs, in rationals.
struct RationalMass {
  Rational lambda, delta_prime, delta_double_prime, kraft;
};

RationalMass recount(const std::vector<ExactPair>& pairs, const std::vector<Request>& requests,
                     const std::function<bool(const BitString&)>& alive, std::size_t shift) {
  RationalMass out;
  std::map<std::pair<BitString, BitString>, std::int64_t> latest;
  for (const auto& r : requests) {
    out.lambda += pow2_neg(static_cast<std::int64_t>(r.length));
    out.kraft += pow2_neg(static_cast<std::int64_t>(r.length + shift));
    latest[{r.origin_key, r.origin_program}] = r.ladder_value;
  }
  for (const auto& p : pairs) {
    auto it = latest.find({p.key, p.program});
    if (it == latest.end()) continue;
    const Rational w = 2 * pow2_neg(static_cast<std::int64_t>(p.program.size()) + it->second);
    (alive(p.key) ? out.delta_prime : out.delta_double_prime) += w;
  }
  return out;
}

// Shared bookkeeping for criteria 1 to 3 over the big single-function suite.
struct SuiteTally {
  std::size_t runs = 0, quiescent = 0, injuries = 0, requests = 0, inequality_pairs = 0;
};

void mass_bounds(const MassDecomposition& d, const RationalMass& q, const std::vector<Request>& requests,
                 std::size_t shift, const std::string& who, Outcome& c1) {
  const Report r = verify_mass_bounds(d, requests, shift);
  if (!r.ok()) {
    for (const auto& c : r.checks()) {
      if (!c.pass) c1.fail(who + " " + c.name + " " + c.detail);
    }
  }
  // the accounting must agree with the rational recount and meet the bounds itself
  if (as_rational(d.lambda) != q.lambda || as_rational(d.delta_prime) != q.delta_prime ||
      as_rational(d.delta_double_prime) != q.delta_double_prime) {
    c1.fail(who + " decomposition disagrees with the rational recount");
  }
  if (!(q.delta_prime <= 2 && q.delta_double_prime <= 2 && q.delta_prime + q.delta_double_prime <= 4 &&
        q.lambda <= q.delta_prime + q.delta_double_prime && q.kraft <= 1)) {
    c1.fail(who + " rational bounds violated");
  }
}

void criteria_single_suite(Outcome& c1, Outcome& c2, Outcome& c3, SuiteTally& t, double& seconds) {
  const auto start = std::chrono::steady_clock::now();
  const char* specs[] = {"f f2o=1 default=const:0", "f f2o=1 default=linear:3:0", "f f2o=1 default=log2len",
                         "f f2o=1 default=const:4 len:1@1-400=70", "f f2o=1 default=linear:1:2 =0@1-900=16"};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto f = fn(specs[seed % 5]);
    GeneratorProfile p = GeneratorProfile::parse("horizon=2000 max_len=12 max_events=120 stop=1200");
    p.injurious = seed % 2 == 1;
    p.event_rate = 0.1 + 0.05 * static_cast<double>(seed % 4);
    p.pressure = p.injurious ? 0.6 : 0.05 * static_cast<double>(seed % 3);
    const EngineParams params{8, SIZE_MAX};
    SingleEngine e = run_construction(f, generate_adversarial_stream(seed, p, f, params), 2000, params);
    const std::string who = "seed " + std::to_string(seed);
    ++t.runs;
    const auto& tree = e.tree();
    const auto& pairs = e.enumeration().pairs();
    const auto& reqs = e.requests().requests();
    t.requests += reqs.size();
    const auto alive = [&](const BitString& x) { return tree.alive(x); };
    const MassDecomposition d =
        decompose_mass(AccountingInput{&pairs, &reqs, alive, [&](const BitString& x) { return tree.choices_of(x); }});
    mass_bounds(d, recount(pairs, reqs, alive, 2), reqs, 2, who, c1);
    if (!verify_ledger(e.requests()).pass) c1.fail(who + " ledger");

    if (e.quiescent()) {
      ++t.quiescent;
      const Check m = verify_main_inequality(e, 2);
      t.inequality_pairs += std::stoull(m.detail);
      if (!m.pass) c2.fail(who + " " + m.detail);
    }

    t.injuries += e.injuries().size();
    const Report charge = verify_injury_charge(e.injuries());
    for (const auto& c : charge.checks()) {
      if (!c.pass) c3.fail(who + " " + c.name + " " + c.detail);
    }
    const Report audit = audit_single_injuries(e);
    for (const auto& c : audit.checks()) {
      if (!c.pass) c3.fail(who + " " + c.name + " " + c.detail);
    }
  }
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (t.runs < 1000) c1.fail("fewer than 1000 runs");
  if (seconds > 600) c1.fail("suite took longer than ten minutes");
  if (t.quiescent == 0 || t.inequality_pairs == 0) c2.fail("no quiescent run checked anything");
  if (t.injuries == 0) c3.fail("no injuries exercised");
}

void criterion_ladder(Outcome& c3) {
  const Report r = verify_ladder_inequality(20, 20);
  for (const auto& c : r.checks()) {
    if (!c.pass) c3.fail(c.name + " " + c.detail);
  }
  // the same two families, recomputed here on big integers
  auto c = [](int i) { return i == 0 ? BigInt(0) : BigInt(1) << (2 * i); };
  for (int i = 0; i <= 20; ++i) {
    for (int l = 1; l <= 20; ++l) {
      if (c(i + l) < c(i) + i + 2 * l + 2) c3.fail("ladder gap at i=" + std::to_string(i));
    }
    const BigInt e = BigInt((i * i + 3 * i + 2) / 2) - c(i) - 1;
    // 2^e <= 2^-i
    if (e > -i) c3.fail("closure at i=" + std::to_string(i));
  }
}

void criterion_reference(Outcome& c4, std::size_t& instances) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const ref::TinyInstance in = ref::tiny_instance(seed);
    if (in.horizon > 50 || in.stream.events.size() > 10 || in.params.max_targets > 8) {
      c4.fail("instance " + std::to_string(seed) + " is not tiny");
      continue;
    }
    ++instances;
    const std::string diff = ref::cross_check(in);
    if (!diff.empty()) c4.fail("seed " + std::to_string(seed) + ": " + diff);
  }
}

void criterion_perfection(Outcome& c5, std::size_t& settled_runs, std::size_t& targets) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto f = fn(seed % 2 ? "f f2o=1 default=log2len" : "f f2o=1 default=linear:2:0");
    GeneratorProfile p = GeneratorProfile::parse("horizon=800 max_len=10 rate=0.3 stop=400 pressure=0");
    const EngineParams params{10, SIZE_MAX};
    SingleEngine e = run_construction(f, generate_adversarial_stream(seed, p, f, params), 800, params);
    const auto& tree = e.tree();
    if (!e.quiescent() || tree.level_count() < 6) continue;
    ++settled_runs;
    for (std::size_t i = 0; i < tree.level_count(); ++i) {
      const std::uint64_t want = std::uint64_t{1} << i;
      const std::uint64_t got = count_living_at(tree, tree.levels()[i], want + 1);
      if (got != want) {
        c5.fail("seed " + std::to_string(seed) + " level " + std::to_string(i) + " has " + std::to_string(got));
      }
    }
  }
  if (settled_runs < 40) c5.fail("only " + std::to_string(settled_runs) + " benign runs settled six levels");

  // a deep benign tree for the coding argument
  const auto f = fn("f f2o=1 default=log2len");
  GeneratorProfile p = GeneratorProfile::parse("horizon=2000 max_len=10 rate=0.2 stop=600 pressure=0");
  const EngineParams params{40, SIZE_MAX};
  SingleEngine e = run_construction(f, generate_adversarial_stream(99, p, f, params), 2000, params);
  const auto& tree = e.tree();
  if (tree.level_count() < 32) {
    c5.fail("deep run settled only " + std::to_string(tree.level_count()) + " levels");
    return;
  }
  for (std::size_t i = 0; i <= 12; ++i) {
    if (count_living_at(tree, tree.levels()[i], (std::uint64_t{1} << i) + 1) != (std::uint64_t{1} << i)) {
      c5.fail("deep run level " + std::to_string(i) + " is not fully branching");
    }
  }
  Rng rng(2718);
  for (int k = 0; k < 200; ++k) {
    const BitString target = rng.bits(32);
    const CodingJoin j = coding_join(tree, target);
    ++targets;
    bool ok = j.reconstruction == target && tree.alive(j.path_b) && tree.alive(j.path_c);
    for (std::size_t i = 0; ok && i < 32; ++i) ok = j.path_b.bit(tree.levels()[i]) == target.bit(i);
    if (!ok) c5.fail("target " + target.text() + " not reconstructed");
  }
}

void criterion_universal(Outcome& c6, std::size_t& runs, std::size_t& correct_injuries) {
  const auto phis = three_phis();
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    GeneratorProfile p = GeneratorProfile::parse("horizon=600 max_len=5 rate=0.25 stop=300 max_events=60");
    p.injurious = seed % 2 == 1;
    p.pressure = 0.2 + 0.1 * static_cast<double>(seed % 5);
    const UniversalParams params{6, SIZE_MAX};
    UniversalEngine e(phis, params);
    e.enqueue(generate_universal_stream(seed, p, phis, params));
    e.run_until(600);
    const std::string who = "seed " + std::to_string(seed);
    if (!e.quiescent_for(kTruth)) {
      c6.fail(who + " did not quiesce");
      continue;
    }
    ++runs;
    const TStar ts = extract_tstar(e, kTruth);
    if (!ts.perfect || ts.leaves.empty()) c6.fail(who + " T* not perfect");
    const auto& pairs = e.enumeration().pairs();
    const auto alive = [&](const BitString& x) { return e.alive(x); };
    for (std::size_t fam = 0; fam < kTruth.size(); ++fam) {
      const auto& reqs = e.requests(fam).requests();
      const MassDecomposition d =
          decompose_mass(AccountingInput{&pairs, &reqs, alive, [&](const BitString& x) { return e.choices_of(x); }});
      Outcome scratch;
      mass_bounds(d, recount(pairs, reqs, alive, 2), reqs, 2, who, scratch);
      if (!scratch.pass) c6.fail("e" + std::to_string(fam) + " " + scratch.first_problem);
      if (kTruth[fam]) {
        const Check m = verify_main_inequality(e, fam, ts.leaves, 2);
        if (!m.pass) c6.fail(who + " " + m.name + " " + m.detail);
      }
    }
    std::vector<InjuryRecord> injuries = e.injuries();
    for (const auto& c : verify_injury_charge(injuries).checks()) {
      if (!c.pass) c6.fail(who + " " + c.name + " " + c.detail);
    }
    // correct-guess injury counts no longer move once the run is quiet
    auto correct_counts = [&]() {
      std::map<ClassKey, std::size_t> out;
      for (const auto& [cls, n] : e.injury_counts()) {
        // class keys keep only the guess bits, one per function
        bool correct = true;
        for (std::size_t j = 0; j < cls.guesses.size(); ++j) {
          if (cls.guesses.bit(j) != (j < kTruth.size() && kTruth[j] ? 1 : 0)) correct = false;
        }
        if (correct) out[cls] = n;
      }
      return out;
    };
    const auto before = correct_counts();
    for (const auto& [cls, n] : before) correct_injuries += n;
    e.run_until(1200);
    if (correct_counts() != before) c6.fail(who + " correct-guess injuries moved after quiescence");
  }
  if (runs < 30) c6.fail("only " + std::to_string(runs) + " quiescent universal runs");
}

void criterion_dimension(Outcome& c7, std::size_t& runs, std::size_t& samples) {
  const auto f = fn("log2len f2o=1 default=log2len");
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeneratorProfile p = GeneratorProfile::parse("horizon=800 max_len=10 rate=0.35 stop=400 max_events=80");
    p.pressure = 0.1 * static_cast<double>(seed % 5);
    p.injurious = seed % 3 == 0;
    const EngineParams params{8, SIZE_MAX};
    SingleEngine e = run_construction(f, generate_adversarial_stream(seed, p, f, params), 800, params);
    if (!e.quiescent()) continue;
    ++runs;
    const auto picked = pick_dimension_samples(e, 50, seed);
    if (picked.size() != 50) {
      c7.fail("seed " + std::to_string(seed) + " produced " + std::to_string(picked.size()) + " samples");
      continue;
    }
    const DimensionResult d = dimension_check(e, picked, 2);
    for (const auto& c : d.report.checks()) {
      if (!c.pass) c7.fail("seed " + std::to_string(seed) + " " + c.name + " " + c.detail);
    }
    for (const auto& row : d.rows) {
      ++samples;
      std::uint64_t lg = 0;
      while ((std::uint64_t{2} << lg) <= row.n) ++lg;
      if (row.log_term() != std::to_string(lg) + "/" + std::to_string(row.n)) {
        c7.fail("log term " + row.log_term() + " for n=" + std::to_string(row.n));
      }
    }
  }
  if (runs < 20) c7.fail("only " + std::to_string(runs) + " quiescent dimension runs");
}

RunConfig config_from(const std::string& text) {
  std::istringstream is(text);
  return RunConfig::parse(is);
}

void criterion_audit(Outcome& c8, std::size_t& configs, std::size_t& fixtures) {
  std::vector<RunConfig> cfgs;
  for (std::uint64_t s = 0; s < 4; ++s) {
    cfgs.push_back(config_from("mode = single\nhorizon = 400\nseed = " + std::to_string(s) +
                               "\nprofile = max_len=8 rate=0.3 stop=250 pressure=0.6 injurious=" +
                               std::to_string(s % 2) + "\nfunction = f f2o=1 default=linear:2:0\n"));
    cfgs.push_back(config_from("mode = universal\nhorizon = 300\nseed = " + std::to_string(s) +
                               "\nprofile = max_len=4 rate=0.25 stop=150 pressure=0.5\n"
                               "phi = p0 f2o=1 default=linear:4:0\nphi = p1 f2o=0 default=const:70\n"
                               "phi = p2 f2o=1 default=linear:200:0\nmax_levels = 5\n"));
    cfgs.push_back(config_from("mode = dimension\nhorizon = 400\nseed = " + std::to_string(s) +
                               "\nprofile = max_len=8 rate=0.4 stop=200 pressure=0.3\nsamples = 20\n"));
  }
  std::vector<RunArtifacts> runs;
  for (const auto& c : cfgs) {
    ++configs;
    RunArtifacts a = run_config(c);
    const RunArtifacts b = run_config(c);
    const std::string who = std::string(mode_name(c.mode)) + " seed " + std::to_string(c.seed);
    if (a.trace != b.trace || !(a.report == b.report) || a.requests_log != b.requests_log || a.code_dump != b.code_dump) {
      c8.fail(who + " not deterministic");
    }
    const VerifyOutcome v = verify_trace(a.trace);
    if (!(v.report == a.report) || !v.audit.ok()) c8.fail(who + " verify did not reproduce the report");
    runs.push_back(std::move(a));
  }
  Rng rng(8);
  for (int k = 0; k < 120; ++k) {
    std::string what;
    const auto mutated = mutation::mutate_trace(runs[k % runs.size()].trace, rng, &what);
    ++fixtures;
    if (!mutation::mutation_detected(mutated)) c8.fail("undetected mutation " + what);
  }
}

void print(int k, const Outcome& o) {
  std::cout << "criterion " << k << ' ' << (o.pass ? "PASS" : "FAIL") << ": " << o.detail;
  if (!o.pass) std::cout << " | first problem: " << o.first_problem;
  std::cout << std::endl;
}

}  // namespace

int main() {
  Outcome c[9];
  try {
    SuiteTally t;
    double seconds = 0;
    criteria_single_suite(c[1], c[2], c[3], t, seconds);
    std::ostringstream s1;
    s1 << t.runs << " runs at horizon 2000, " << t.requests << " requests, exact bounds on Delta', Delta'', Delta, "
       << "Lambda and the shifted Kraft sum, " << static_cast<int>(seconds) << "s";
    c[1].detail = s1.str();
    c[2].detail = std::to_string(t.quiescent) + " quiescent runs, " + std::to_string(t.inequality_pairs) +
                  " (sigma, leaf) pairs checked";
    criterion_ladder(c[3]);
    c[3].detail = std::to_string(t.injuries) + " injuries charged and audited, ladder gap and closure to 20";
    print(1, c[1]);
    print(2, c[2]);
    print(3, c[3]);

    std::size_t instances = 0;
    criterion_reference(c[4], instances);
    c[4].detail = std::to_string(instances) + " tiny instances compared stage by stage";
    print(4, c[4]);

    std::size_t settled = 0, targets = 0;
    criterion_perfection(c[5], settled, targets);
    c[5].detail = std::to_string(settled) + " benign runs with full branching, " + std::to_string(targets) +
                  " coding targets reconstructed";
    print(5, c[5]);

    std::size_t uruns = 0, correct = 0;
    criterion_universal(c[6], uruns, correct);
    c[6].detail = std::to_string(uruns) + " quiescent three-function runs, " + std::to_string(correct) +
                  " correct-guess injuries, all stable after quiescence";
    print(6, c[6]);

    std::size_t druns = 0, samples = 0;
    criterion_dimension(c[7], druns, samples);
    c[7].detail = std::to_string(druns) + " quiescent runs, " + std::to_string(samples) + " samples";
    print(7, c[7]);

    std::size_t configs = 0, fixtures = 0;
    criterion_audit(c[8], configs, fixtures);
    c[8].detail = std::to_string(configs) + " configs repeated and verified, " + std::to_string(fixtures) +
                  " mutation fixtures";
    print(8, c[8]);
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 2;
  }
  int failed = 0;
  for (int k = 1; k <= 8; ++k) failed += c[k].pass ? 0 : 1;
  std::cout << (failed == 0 ? "all criteria PASS" : std::to_string(failed) + " criteria FAIL") << std::endl;
  return failed == 0 ? 0 : 1;
}
