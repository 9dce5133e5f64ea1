#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "kcsim/analysis/coding.hpp"
#include "kcsim/analysis/dimension.hpp"
#include "kcsim/analysis/inequality.hpp"
#include "kcsim/analysis/information.hpp"
#include "kcsim/analysis/injury.hpp"
#include "kcsim/analysis/mass.hpp"
#include "kcsim/generator.hpp"

using namespace kcsim;

namespace {

BitString B(const char* s) { return BitString::from_text(s); }
DyadicMass P(std::int64_t k) { return DyadicMass::inverse_power(k); }

std::shared_ptr<const ApproximatedFunction> fn(const std::string& spec) {
  return std::make_shared<ScheduleFunction>(ScheduleFunction::parse(spec));
}

ExactPair pair(const char* key, const char* program, const char* output = "1") {
  return ExactPair{1, B(key), B(program), B(output)};
}

Request request(const char* target, std::size_t length, const char* key, const char* program, std::int64_t c) {
  return Request{B(target), length, 1, B(key), B(program), c};
}

MassDecomposition decompose(const SingleEngine& e) {
  const auto& tree = e.tree();
  return decompose_mass(AccountingInput{&e.enumeration().pairs(), &e.requests().requests(),
                                        [&](const BitString& x) { return tree.alive(x); },
                                        [&](const BitString& x) { return tree.choices_of(x); }});
}

const Check& find(const Report& r, const std::string& name) {
  for (const auto& c : r.checks()) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no check " + name);
}

SingleEngine random_run(std::uint64_t seed, Stage horizon = 400, bool injurious = false) {
  const char* specs[] = {"f f2o=1 default=const:0", "f f2o=1 default=linear:3:0", "f f2o=1 default=log2len"};
  auto f = fn(specs[seed % 3]);
  GeneratorProfile p = GeneratorProfile::parse("max_len=6 rate=0.3 pressure=0.6 stop=200");
  p.horizon = horizon;
  p.injurious = injurious;
  EngineParams params{6, SIZE_MAX};
  return run_construction(f, generate_adversarial_stream(seed, p, f, params), horizon, params);
}

}  // namespace

TEST(MassDecomposition, HandExample) {
  // keys 0 and 01 survive, key 1 was killed
  const std::vector<ExactPair> pairs{pair("0", "00"), pair("1", "1"), pair("01", "111")};
  const std::vector<Request> reqs{request("", 3, "0", "00", 0), request("1", 6, "1", "1", 4),
                                  request("0", 5, "11", "0", 0)};
  AccountingInput in{&pairs, &reqs, [](const BitString& x) { return x.size() == 0 || x.bit(0) == 0; },
                     [](const BitString& x) { return x.size() >= 2 ? x.prefix(1) : BitString(); }};
  const MassDecomposition d = decompose_mass(in);
  EXPECT_EQ(d.lambda, P(3) + P(6) + P(5));
  // 2^-(|tau| + c - 1): 2^-1 for the living pair, 2^-4 for the dead one
  EXPECT_EQ(d.delta_prime, P(1));
  EXPECT_EQ(d.delta_double_prime, P(4));
  EXPECT_EQ(d.delta, P(1) + P(4));
  EXPECT_EQ(d.charged_pairs, 2u);
  EXPECT_EQ(d.living_pairs, 2u);
  EXPECT_EQ(d.unmatched_requests, 1u);
  ASSERT_EQ(d.per_sigma.size(), 2u);
  EXPECT_EQ(d.per_sigma.at(BitString()).m, P(2));
  EXPECT_EQ(d.per_sigma.at(B("0")).m, P(3));

  const Report r = verify_mass_bounds(d, reqs, 2);
  EXPECT_FALSE(find(r, "request_origins").pass);
  EXPECT_TRUE(find(r, "delta_partition").pass);
  EXPECT_TRUE(find(r, "lambda_le_delta").pass);
  EXPECT_EQ(find(r, "choice_path_mass").detail, "3/3 <= 1 at 0");
  EXPECT_EQ(r.failures(), 1u);
}

TEST(MassBounds, FabricatedViolationsFailWithNegativeMargin) {
  // three living pairs with one-bit programs each cost 2^0 at ladder value 0
  const std::vector<ExactPair> pairs{pair("0", "0"), pair("10", "0"), pair("11", "0")};
  const std::vector<Request> reqs{request("", 1, "0", "0", 0), request("", 1, "10", "0", 0),
                                  request("", 1, "11", "0", 0)};
  AccountingInput in{&pairs, &reqs, [](const BitString&) { return true; }, [](const BitString&) { return BitString(); }};
  const Report r = verify_mass_bounds(decompose_mass(in), reqs, 0);
  EXPECT_FALSE(find(r, "delta_prime").pass);
  EXPECT_EQ(find(r, "delta_prime").margin, "-1/0");
  EXPECT_TRUE(find(r, "delta_double_prime").pass);
  EXPECT_FALSE(find(r, "kraft_shift0").pass);
  EXPECT_FALSE(find(r, "choice_path_mass").pass);
  EXPECT_TRUE(find(r, "lambda").pass);
  EXPECT_THROW(require(r), BoundViolated);
}

TEST(MassBounds, RandomRunsStayWithinBounds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const SingleEngine e = random_run(seed, 400, seed % 2);
    const MassDecomposition d = decompose(e);
    const Report r = verify_mass_bounds(d, e.requests().requests(), 2);
    EXPECT_TRUE(r.ok()) << "seed " << seed;
    EXPECT_EQ(d.unmatched_requests, 0u);
    EXPECT_TRUE(verify_ledger(e.requests()).pass);
  }
}

TEST(Ladder, GapAndClosureHoldToTwenty) {
  const Report r = verify_ladder_inequality(20, 20);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.checks()[0].detail, "420 pairs, 0 failures");
  // i = 0 is tight: 2^1 / 2^1 = 2^0
  EXPECT_EQ(r.checks()[1].detail, "21 values, 0 failures, smallest exponent gap 0");
  // independent recomputation on machine integers for the small range
  for (int i = 0; i <= 12; ++i) {
    for (int l = 1; l <= 12; ++l) {
      EXPECT_GE(ladder_value(i + l), ladder_value(i) + i + 2 * l + 2);
    }
    EXPECT_LE((i * i + 3 * i + 2) / 2 - (ladder_value(i) + 1), -i);
  }
}

TEST(InjuryCharge, FabricatedOverchargeFails) {
  InjuryRecord inj;
  inj.ladder_index = 1;
  inj.m = P(1);
  // bound is m / 2^(c_1 + 1) = 2^-6
  inj.charged = P(6);
  EXPECT_TRUE(verify_injury_charge({inj}).ok());
  EXPECT_EQ(verify_injury_charge({inj}).checks()[0].margin, "0/0");
  inj.charged = P(5);
  const Report r = verify_injury_charge({inj});
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.checks()[0].margin, "-1/6");
}

TEST(InjuryCharge, AuditAgreesOnRandomInjuriousRuns) {
  std::size_t injuries = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SingleEngine e = random_run(seed, 300, true);
    injuries += e.injuries().size();
    EXPECT_TRUE(verify_injury_charge(e.injuries()).ok()) << "seed " << seed;
    const Report a = audit_single_injuries(e);
    EXPECT_EQ(a.size(), e.injuries().size());
    EXPECT_TRUE(a.ok()) << "seed " << seed;
  }
  EXPECT_GT(injuries, 10u);
}

TEST(CodingJoin, RandomTargetsReconstructOnADeepTree) {
  SingleEngine e(fn("f f2o=1 default=const:0"), EngineParams{40, 16});
  e.run_until(90);
  const auto& tree = e.tree();
  ASSERT_EQ(tree.level_count(), 40u);
  Rng rng(2024);
  for (int k = 0; k < 200; ++k) {
    const BitString target = rng.bits(32);
    const CodingJoin j = coding_join(tree, target);
    EXPECT_EQ(j.reconstruction, target);
    EXPECT_TRUE(tree.alive(j.path_b));
    EXPECT_TRUE(tree.alive(j.path_c));
    for (std::size_t i = 0; i < 32; ++i) {
      const std::size_t at = tree.levels()[i];
      EXPECT_EQ(j.path_b.bit(at), target.bit(i));
      EXPECT_NE(j.path_c.bit(at), target.bit(i));
    }
  }
  EXPECT_THROW(coding_join(tree, rng.bits(41)), InsufficientDepth);
}

TEST(Pairing, CantorUnpairEnumeratesEveryPairOnce) {
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (std::uint64_t k = 0; k < 5050; ++k) {
    auto p = cantor_unpair(k);
    EXPECT_TRUE(seen.insert(p).second);
    EXPECT_LT(p.first + p.second, 100u);
  }
  EXPECT_EQ(seen.size(), 5050u);
  EXPECT_EQ(cantor_unpair(0), std::make_pair(std::uint64_t{0}, std::uint64_t{0}));
  EXPECT_EQ(cantor_unpair(1), std::make_pair(std::uint64_t{1}, std::uint64_t{0}));
  EXPECT_EQ(cantor_unpair(2), std::make_pair(std::uint64_t{0}, std::uint64_t{1}));
}

TEST(Pairing, StringPairingIsInjective) {
  std::set<BitString> seen;
  for (std::uint64_t a = 0; a < 31; ++a) {
    for (std::uint64_t b = 0; b < 31; ++b) {
      EXPECT_TRUE(seen.insert(pair_strings(length_lex_string(a), length_lex_string(b))).second);
    }
  }
  EXPECT_EQ(pair_strings(B("01"), B("1")), B("110011"));
}

TEST(SelfInformation, PartialSumsGrowWithTheCutoff) {
  ComplexityTable t;
  Rng rng(5);
  for (std::uint64_t k = 0; k < 40; ++k) {
    const BitString s = length_lex_string(k);
    t.record(BitString(), s, s.size() + 3);
    t.record(B("01"), s, s.size() + 1 + rng.below(3));
  }
  for (std::uint64_t a = 0; a < 7; ++a) {
    for (std::uint64_t b = 0; b < 7; ++b) {
      const BitString p = pair_strings(length_lex_string(a), length_lex_string(b));
      t.record(BitString(), p, p.size() + 1);
    }
  }
  DyadicMass prev;
  std::size_t prev_terms = 0;
  for (std::size_t cutoff = 0; cutoff <= 60; cutoff += 5) {
    const InformationPartial ip = self_information_partial(t, B("011"), B("010"), cutoff);
    EXPECT_GE(ip.sum, prev);
    EXPECT_GE(ip.terms, prev_terms);
    EXPECT_LE(ip.terms, cutoff);
    prev = ip.sum;
    prev_terms = ip.terms;
  }
  EXPECT_GT(prev_terms, 20u);
  // off the relativized rows the K terms cancel and only 2^-K(<sigma,tau>) is left
  const InformationPartial plain = self_information_partial(t, B("1"), B("1"), 28);
  DyadicMass want;
  for (std::uint64_t k = 0; k < 28; ++k) {
    auto [x, y] = cantor_unpair(k);
    want += P(static_cast<std::int64_t>(*t.k_plain(pair_strings(length_lex_string(x), length_lex_string(y)))));
  }
  EXPECT_EQ(plain.terms, 28u);
  EXPECT_EQ(plain.sum, want);
}

TEST(MainInequality, HoldsOnQuiescentRuns) {
  std::size_t quiet = 0;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    SingleEngine e = random_run(seed, 400, seed % 2);
    if (!e.quiescent()) continue;
    ++quiet;
    const Check c = verify_main_inequality(e, 2);
    EXPECT_TRUE(c.pass) << "seed " << seed << " " << c.detail;
    EXPECT_NE(c.detail.substr(0, 2), "0 ");
  }
  EXPECT_GT(quiet, 12u);
}

TEST(MainInequality, UnsettledApproximationChecksNothing) {
  SingleEngine e(fn("f f2o=1 default=const:0 len:1@1-500=4"), EngineParams{4, SIZE_MAX});
  e.enqueue(DescriptionEvent{1, B("00"), B("01"), B("1"), 1});
  e.run_until(40);
  const Check c = verify_main_inequality(e, 2);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.detail, "0 pairs, 0 violations");
}

TEST(Dimension, LogTermIsTheFloorOverN) {
  auto f = fn("f f2o=1 default=log2len");
  GeneratorProfile p = GeneratorProfile::parse("horizon=400 max_len=10 rate=0.4 stop=200 pressure=0.3");
  std::size_t rows = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    SingleEngine e = run_construction(f, generate_adversarial_stream(seed, p, f), 400);
    if (!e.quiescent()) continue;
    const auto samples = pick_dimension_samples(e, 50, seed);
    const DimensionResult d = dimension_check(e, samples, 2);
    EXPECT_TRUE(d.report.ok()) << "seed " << seed;
    for (const auto& row : d.rows) {
      std::uint64_t lg = 0;
      while ((std::uint64_t{2} << lg) <= row.n) ++lg;
      EXPECT_EQ(row.log_term(), std::to_string(lg) + "/" + std::to_string(row.n));
      ++rows;
    }
  }
  EXPECT_GE(rows, 100u);
  EXPECT_EQ(floor_log2(1), 0u);
  EXPECT_EQ(floor_log2(7), 2u);
  EXPECT_EQ(floor_log2(8), 3u);
}

TEST(Dimension, EmptyPrefixIsRejected) {
  SingleEngine e(fn("f f2o=1 default=log2len"));
  e.run_until(5);
  EXPECT_THROW(dimension_check(e, {DimensionSample{BitString(), B("0")}}), SampleUnresolved);
  EXPECT_THROW(dimension_check(e, {DimensionSample{B("1"), B("0")}}), SampleUnresolved);
}

TEST(Report, WritesOneLinePerCheck) {
  Report r;
  r.add(bound_check("lambda", P(2), DyadicMass::power_of_two(2)));
  r.add(Check{"quiescent", true, "-", ""});
  Report inner;
  inner.add(Check{"x", false, "-", "why"});
  r.add_prefixed("e1.", inner);
  std::ostringstream os;
  r.write(os);
  EXPECT_EQ(os.str(), "check lambda pass 15/2 1/2 <= 4/0\ncheck quiescent pass -\ncheck e1.x FAIL - why\n");
  EXPECT_EQ(r.failures(), 1u);
}
