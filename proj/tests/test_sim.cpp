#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "dshuffle/bounds.hpp"
#include "dshuffle/sim.hpp"

using namespace dshuffle;

namespace {

SimConfig base(int K, SchemeKind s, int param = 0) {
  SimConfig cfg;
  cfg.K = K;
  cfg.scheme = s;
  cfg.param = param;
  return cfg;
}

}  // namespace

TEST_CASE("bounded_rand is unbiased over its range and deterministic") {
  std::mt19937_64 a(7), b(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 3000; ++i) {
    std::uint64_t x = bounded_rand(a, 6);
    CHECK(x < 6);
    seen.insert(x);
    CHECK(x == bounded_rand(b, 6));
  }
  CHECK(seen.size() == 6);
  CHECK(bounded_rand(a, 1) == 0);
}

TEST_CASE("random derangements are valid and cover all of them") {
  std::mt19937_64 rng(12);
  std::set<std::vector<int>> seen;
  for (int i = 0; i < 4000; ++i) {
    auto d = random_derangement(4, rng);
    REQUIRE(d.size() == 4);
    for (int k = 1; k <= 4; ++k) CHECK(d[k - 1] != k);
    std::set<int> uniq(d.begin(), d.end());
    CHECK(uniq.size() == 4);
    seen.insert(d);
  }
  CHECK(seen.size() == 9);  // all derangements of 4 elements
}

TEST_CASE("shuffle generators") {
  std::mt19937_64 rng(3);
  Assignment prev = make_assignment(4, 2, {{7, 2}, {1, 8}, {3, 6}, {4, 5}});

  Assignment cyc = gen_shuffle(ShuffleMode::Cyclic, prev, rng, {}, 1);
  for (int k = 1; k <= 4; ++k) CHECK(cyc.units_of(k) == prev.units_of(k % 4 + 1));
  CHECK(is_full_derangement(prev, cyc));
  auto d = batch_derangement_of(prev, cyc);
  REQUIRE(d.has_value());
  CHECK(*d == std::vector<int>{2, 3, 4, 1});

  Assignment worst = gen_shuffle(ShuffleMode::Worst, prev, rng, {}, 1);
  CHECK(is_full_derangement(prev, worst));
  CHECK(batch_derangement_of(prev, worst).has_value());

  Assignment rnd = gen_shuffle(ShuffleMode::Random, prev, rng, {}, 1);
  CHECK(!validate_assignment(rnd, 4, 2));

  Assignment scripted = gen_shuffle(ShuffleMode::Scripted, prev, rng, {prev, cyc}, 2);
  CHECK(scripted == cyc);
  CHECK_THROWS_AS(gen_shuffle(ShuffleMode::Scripted, prev, rng, {prev}, 2),
                  std::invalid_argument);
}

TEST_CASE("full derangement and batch derangement detection") {
  Assignment prev = identity_assignment(3, 2);
  CHECK_FALSE(is_full_derangement(prev, prev));
  Assignment part = make_assignment(3, 2, {{1, 4}, {2, 3}, {5, 6}}, 1);
  CHECK_FALSE(is_full_derangement(prev, part));       // unit 1 stays at worker 1
  CHECK_FALSE(batch_derangement_of(prev, part).has_value());
  Assignment mix = make_assignment(3, 2, {{3, 6}, {1, 5}, {2, 4}}, 1);
  CHECK(is_full_derangement(prev, mix));              // scattered, not batch-preserving
  CHECK_FALSE(batch_derangement_of(prev, mix).has_value());
  Assignment swap = make_assignment(3, 2, {{3, 4}, {1, 2}, {5, 6}}, 1);
  CHECK_FALSE(batch_derangement_of(prev, swap).has_value());  // worker 3 keeps its batch
}

TEST_CASE("sessions are reproducible for identical configs") {
  SimConfig cfg = base(5, SchemeKind::B, 3);
  cfg.T = 4;
  cfg.mode = ShuffleMode::Random;
  cfg.seed = 99;
  SessionReport r1 = run_session(cfg);
  SessionReport r2 = run_session(cfg);
  REQUIRE(r1.ok);
  REQUIRE(r2.ok);
  CHECK(r1.B == r2.B);
  CHECK(r1.trace == r2.trace);
  REQUIRE(r1.epochs.size() == r2.epochs.size());
  for (size_t i = 0; i < r1.epochs.size(); ++i) {
    CHECK(r1.epochs[i].assign == r2.epochs[i].assign);
    CHECK(r1.epochs[i].load == r2.epochs[i].load);
  }
  cfg.seed = 100;
  SessionReport r3 = run_session(cfg);
  REQUIRE(r3.ok);
  bool differs = r3.trace != r1.trace;
  for (size_t i = 0; i < r1.epochs.size() && !differs; ++i)
    differs = !(r3.epochs[i].assign == r1.epochs[i].assign);
  CHECK(differs);
}

TEST_CASE("worst mode hits the closed-form load every epoch") {
  for (SchemeKind s : {SchemeKind::Uncoded, SchemeKind::A, SchemeKind::B, SchemeKind::C}) {
    SimConfig cfg = base(5, s, s == SchemeKind::A ? 2 : (s == SchemeKind::B ? 4 : 0));
    cfg.T = 3;
    cfg.seed = 17;
    SessionReport rep = run_session(cfg);
    REQUIRE_MESSAGE(rep.ok, rep.failure);
    Rational want = scheme_load_formula(s, 5, cfg.param);
    for (const EpochStats& e : rep.epochs) {
      CHECK(e.full_derangement);
      CHECK(e.load_over_q == want);
      REQUIRE(e.lower_bound.has_value());
      CHECK(e.load >= *e.lower_bound);
    }
    CHECK(rep.worst_load_over_q == want);
  }
}

TEST_CASE("an identity script moves nothing") {
  SimConfig cfg = base(4, SchemeKind::B, 3);
  cfg.mode = ShuffleMode::Scripted;
  cfg.T = 2;
  cfg.script = {identity_assignment(4, 1, 1), identity_assignment(4, 1, 2)};
  SessionReport rep = run_session(cfg);
  REQUIRE_MESSAGE(rep.ok, rep.failure);
  for (const EpochStats& e : rep.epochs) {
    CHECK(e.load == Rational(0));
    CHECK_FALSE(e.full_derangement);
    CHECK_FALSE(e.lower_bound.has_value());  // not a batch derangement
  }
  CHECK(rep.trace.empty());
}

TEST_CASE("cyclic K=5 pair scheme costs 5/2 per epoch with bound 15/8") {
  SimConfig cfg = base(5, SchemeKind::C);
  cfg.mode = ShuffleMode::Cyclic;
  cfg.T = 3;
  cfg.init = make_assignment1({5, 1, 2, 3, 4});
  SessionReport rep = run_session(cfg);
  REQUIRE_MESSAGE(rep.ok, rep.failure);
  for (const EpochStats& e : rep.epochs) {
    CHECK(e.load == Rational(5, 2));
    REQUIRE(e.lower_bound.has_value());
    CHECK(*e.lower_bound == Rational(15, 8));
  }
}

TEST_CASE("q=2 sessions run two groups per epoch") {
  SimConfig cfg = base(4, SchemeKind::C);
  cfg.q = 2;
  cfg.T = 3;
  cfg.mode = ShuffleMode::Random;
  cfg.seed = 5;
  SessionReport rep = run_session(cfg);
  REQUIRE_MESSAGE(rep.ok, rep.failure);
  for (const EpochStats& e : rep.epochs) {
    CHECK(e.load_over_q == e.load / Rational(2));
    CHECK(e.load_over_q <= scheme_load_formula(SchemeKind::C, 4, 0));
  }
}

TEST_CASE("combined sessions split the block and match the envelope") {
  SimConfig cfg = base(4, SchemeKind::Combined);
  cfg.m_over_q = Rational(5, 2);
  cfg.T = 2;
  cfg.seed = 23;
  SessionReport rep = run_session(cfg);
  REQUIRE_MESSAGE(rep.ok, rep.failure);
  CHECK(rep.B == default_block_bits(cfg));
  for (const EpochStats& e : rep.epochs)
    CHECK(e.load_over_q == combined_load_at(4, Rational(5, 2)));
  bool p1 = false, p2 = false;
  for (const std::string& line : rep.trace) {
    p1 = p1 || line.find("tag=p1 ") != std::string::npos;
    p2 = p2 || line.find("tag=p2 ") != std::string::npos;
  }
  CHECK(p1);
  CHECK(p2);
}

TEST_CASE("trace lines carry epoch sender tag components and payload") {
  SimConfig cfg = base(3, SchemeKind::B, 2);
  cfg.T = 1;
  cfg.seed = 2;
  SessionReport rep = run_session(cfg);
  REQUIRE_MESSAGE(rep.ok, rep.failure);
  REQUIRE(!rep.trace.empty());
  for (const std::string& line : rep.trace) {
    CHECK(line.rfind("t=1 from=", 0) == 0);
    CHECK(line.find(" tag=") != std::string::npos);
    CHECK(line.find(" comps=") != std::string::npos);
    auto pay = line.find(" payload=");
    REQUIRE(pay != std::string::npos);
    CHECK(line.find(':', pay) != std::string::npos);
  }
}

TEST_CASE("default block sizes follow the scheme minimums") {
  CHECK(default_block_bits(base(5, SchemeKind::C)) == 12);
  CHECK(default_block_bits(base(5, SchemeKind::B, 4)) == 16);
  CHECK(default_block_bits(base(6, SchemeKind::A, 2)) == 30);
  SimConfig mix = base(4, SchemeKind::Combined);
  mix.m_over_q = Rational(7, 2);
  CHECK(default_block_bits(mix) == mixture_min_block(4, Rational(7, 2)));
}

TEST_CASE("bad configurations are rejected up front") {
  SimConfig cfg = base(5, SchemeKind::C);
  cfg.B = 10;  // not a multiple of 12
  CHECK_THROWS_AS(run_session(cfg), std::invalid_argument);
  SimConfig nok = base(2, SchemeKind::C);
  CHECK_THROWS_AS(run_session(nok), std::invalid_argument);
  SimConfig badp = base(5, SchemeKind::B, 2);  // m must be K-2 or K-1
  CHECK_THROWS_AS(run_session(badp), std::invalid_argument);
  SimConfig script = base(4, SchemeKind::C);
  script.mode = ShuffleMode::Scripted;
  script.T = 2;
  script.script = {identity_assignment(4, 1, 1)};  // one epoch short
  CHECK_THROWS_AS(run_session(script), std::invalid_argument);
  SimConfig badinit = base(4, SchemeKind::C);
  badinit.init = identity_assignment(5, 1);
  CHECK_THROWS_AS(run_session(badinit), std::invalid_argument);
  SimConfig badmix = base(4, SchemeKind::Combined);
  badmix.m_over_q = Rational(9, 2);  // outside [1, K]
  CHECK_THROWS_AS(run_session(badmix), std::invalid_argument);
  SimConfig zero = base(4, SchemeKind::C);
  zero.T = 0;
  CHECK_THROWS_AS(run_session(zero), std::invalid_argument);
}

TEST_CASE("scheme B at m=K stores everything and never transmits") {
  SimConfig cfg = base(4, SchemeKind::B, 4);
  cfg.T = 3;
  cfg.mode = ShuffleMode::Random;
  cfg.seed = 31;
  SessionReport rep = run_session(cfg);
  REQUIRE_MESSAGE(rep.ok, rep.failure);
  for (const EpochStats& e : rep.epochs) CHECK(e.load == Rational(0));
  CHECK(rep.trace.empty());
}

TEST_CASE("mode names round trip") {
  for (ShuffleMode m :
       {ShuffleMode::Worst, ShuffleMode::Cyclic, ShuffleMode::Random, ShuffleMode::Scripted})
    CHECK(shuffle_mode_from_name(shuffle_mode_name(m)) == m);
  CHECK_THROWS_AS(shuffle_mode_from_name("sideways"), std::invalid_argument);
}
