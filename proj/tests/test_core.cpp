#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>
#include <sstream>

#include "doctest.h"
#include "dshuffle/core.hpp"

using namespace dshuffle;

TEST_CASE("binom basics") {
  CHECK(binom(0, 0) == 1);
  CHECK(binom(5, 0) == 1);
  CHECK(binom(5, 5) == 1);
  CHECK(binom(5, 2) == 10);
  CHECK(binom(8, 3) == 56);
  CHECK(binom(4, 5) == 0);
  CHECK(binom(30, 15) == 155117520);
}

TEST_CASE("rational normalization and rendering") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(-2, 4) == Rational(-1, 2));
  CHECK(Rational(1, -2) == Rational(-1, 2));
  CHECK(Rational(0, 7) == Rational(0));
  CHECK(Rational(0).str() == "0");
  CHECK(Rational(13, 18).str() == "13/18");
  CHECK(Rational(6, 3).str() == "2");
  CHECK(Rational(-5, 10).str() == "-1/2");
  CHECK(Rational(5, 2).dec() == std::string("2.5"));
  CHECK(Rational(1, 3).dec() == std::string("0.333333333333"));
  CHECK(Rational(1, 2).value() == 0.5);
  CHECK_THROWS_AS(Rational(1, 0), std::invalid_argument);
}

TEST_CASE("rational arithmetic is exact") {
  Rational a(5, 6), b(13, 18);
  CHECK(a + b == Rational(14, 9));
  CHECK(a - b == Rational(1, 9));
  CHECK(a * b == Rational(65, 108));
  CHECK(a / b == Rational(15, 13));
  CHECK(Rational(1, 3) + Rational(1, 3) + Rational(1, 3) == Rational(1));
  CHECK(Rational(2, 3) < Rational(3, 4));
  CHECK(Rational(-1, 2) < Rational(0));
  CHECK(Rational(7, 3) > Rational(2));
  CHECK(Rational(4, 6) == Rational(2, 3));
  // accumulating many small exact terms loses nothing
  Rational s;
  for (int i = 0; i < 128; ++i) s = s + Rational(1, 128);
  CHECK(s == Rational(1));
}

TEST_CASE("rational parsing round trips") {
  CHECK(rational_from_string("5/2") == Rational(5, 2));
  CHECK(rational_from_string("7") == Rational(7));
  CHECK(rational_from_string("-3/4") == Rational(-3, 4));
  CHECK(rational_from_string("10/4") == Rational(5, 2));
  for (const Rational& r : {Rational(13, 18), Rational(-7, 2), Rational(4), Rational(0)})
    CHECK(rational_from_string(r.str()) == r);
  CHECK_THROWS_AS(rational_from_string("x"), std::invalid_argument);
  CHECK_THROWS_AS(rational_from_string(""), std::invalid_argument);
  CHECK_THROWS_AS(rational_from_string("1/0"), std::invalid_argument);
}

TEST_CASE("bitblock string and hex round trips") {
  BitBlock b = BitBlock::from_string("1010");
  CHECK(b.size() == 4);
  CHECK(b.get(0));
  CHECK_FALSE(b.get(1));
  CHECK(b.to_string() == "1010");
  CHECK(b.hex() == "4:a");
  CHECK(BitBlock().hex() == "0:");
  CHECK(BitBlock::from_string("1").hex() == "1:8");
  CHECK(BitBlock::from_string("000000011").hex() == "9:018");
  BitBlock z(5);
  CHECK(z.to_string() == "00000");
  z.set(3, true);
  CHECK(z.to_string() == "00010");
}

TEST_CASE("bitblock xor pads with zeros on the right") {
  BitBlock a = BitBlock::from_string("1100");
  BitBlock b = BitBlock::from_string("101");
  BitBlock c = xor_zero_pad(a, b);
  CHECK(c.size() == 4);
  CHECK(c.to_string() == "0110");
  CHECK(xor_zero_pad(a, BitBlock()) == a);
  CHECK(xor_zero_pad(a, a) == BitBlock(4));
  // associative and commutative on a word-boundary-straddling size
  std::mt19937_64 rng(11);
  BitBlock x = BitBlock::random(130, rng);
  BitBlock y = BitBlock::random(130, rng);
  BitBlock w = BitBlock::random(130, rng);
  CHECK(xor_zero_pad(xor_zero_pad(x, y), w) == xor_zero_pad(x, xor_zero_pad(y, w)));
  CHECK(xor_zero_pad(x, y) == xor_zero_pad(y, x));
}

TEST_CASE("bitblock slice and append invert each other") {
  std::mt19937_64 rng(3);
  BitBlock b = BitBlock::random(100, rng);
  BitBlock left = b.slice(0, 37);
  BitBlock right = b.slice(37, 63);
  BitBlock glued = left;
  glued.append(right);
  CHECK(glued == b);
  CHECK(b.slice(64, 8).to_string() == b.to_string().substr(64, 8));
  CHECK(b.slice(10, 0).empty());
}

TEST_CASE("bitblock random is seed-deterministic") {
  std::mt19937_64 r1(42), r2(42), r3(43);
  BitBlock a = BitBlock::random(65, r1);
  BitBlock b = BitBlock::random(65, r2);
  BitBlock c = BitBlock::random(65, r3);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.size() == 65);
}

TEST_CASE("worker sets behave like sorted tuples") {
  WorkerSet s = WorkerSet::of({4, 1});
  CHECK(s.size() == 2);
  CHECK(s.contains(1));
  CHECK(s.contains(4));
  CHECK_FALSE(s.contains(2));
  CHECK(s.elements() == std::vector<int>{1, 4});
  CHECK(s.str() == "{1,4}");
  CHECK(s.rank_of(1) == 0);
  CHECK(s.rank_of(4) == 1);
  CHECK(s.with(2).str() == "{1,2,4}");
  CHECK(s.without(4).str() == "{1}");
  CHECK(WorkerSet::full(3) == WorkerSet::of({1, 2, 3}));
  CHECK(WorkerSet{}.empty());
  // tuple order, not mask order
  CHECK(WorkerSet::of({1, 4}) < WorkerSet::of({2, 3}));
  CHECK(WorkerSet::of({1}) < WorkerSet::of({1, 2}));
  CHECK(WorkerSet::of({2}) > WorkerSet::of({1, 9}));
}

TEST_CASE("assignments validate and index correctly") {
  Assignment a = make_assignment(3, 2, {{5, 2}, {1, 6}, {3, 4}});
  CHECK(a.N() == 6);
  CHECK(a.units_of(1) == std::vector<UnitId>{2, 5});  // batches are sorted
  CHECK(a.worker_of(6) == 2);
  CHECK(a.assigned_to(3, 3));
  CHECK_FALSE(a.assigned_to(3, 1));
  CHECK(!validate_assignment(a, 3, 2));

  Assignment id = identity_assignment(4, 2);
  CHECK(id.units_of(3) == std::vector<UnitId>{5, 6});

  Assignment bad = make_assignment(3, 2, {{1, 2}, {3, 4}, {5, 5}});
  auto err = validate_assignment(bad, 3, 2);
  REQUIRE(err.has_value());
  CHECK(err->find("unit") != std::string::npos);
  Assignment wrongk = make_assignment1({2, 1});
  CHECK(validate_assignment(wrongk, 3, 1).has_value());
}

TEST_CASE("assignment text form round trips") {
  Assignment a = make_assignment1({5, 1, 2, 3, 4});
  CHECK(assignment_str(a) == "5;1;2;3;4");
  CHECK(parse_assignment("5,1,2,3,4", 5, 1) == a);
  CHECK(parse_assignment("5;1;2;3;4", 5, 1) == a);
  Assignment b = make_assignment(2, 2, {{3, 4}, {1, 2}});
  CHECK(assignment_str(b) == "3,4;1,2");
  CHECK(parse_assignment(assignment_str(b), 2, 2) == b);
  CHECK_THROWS_AS(parse_assignment("1,2;2,3", 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(parse_assignment("1,2,3", 2, 2), std::invalid_argument);
}

TEST_CASE("scheme names round trip") {
  for (SchemeKind s : {SchemeKind::Uncoded, SchemeKind::A, SchemeKind::B, SchemeKind::C,
                       SchemeKind::Combined})
    CHECK(scheme_from_name(scheme_name(s)) == s);
  CHECK(scheme_from_name("A") == SchemeKind::A);
  CHECK(scheme_name(SchemeKind::C) == "c");
  CHECK_THROWS_AS(scheme_from_name("d"), std::invalid_argument);
}

TEST_CASE("minimal block sizes") {
  CHECK(minimal_block_size(SchemeKind::Uncoded, 5) == 1);
  CHECK(minimal_block_size(SchemeKind::A, 5, 2) == 20);   // g * C(K,g)
  CHECK(minimal_block_size(SchemeKind::A, 3, 2) == 6);
  CHECK(minimal_block_size(SchemeKind::B, 5, 4) == 16);   // (K-1)^2
  CHECK(minimal_block_size(SchemeKind::B, 5, 3) == 18);   // (K-2) * C(K-1,2)
  CHECK(minimal_block_size(SchemeKind::B, 3, 1) == 1);
  CHECK(minimal_block_size(SchemeKind::B, 6, 4) == 40);
  CHECK(minimal_block_size(SchemeKind::B, 5, 5) == 1);
  CHECK(minimal_block_size(SchemeKind::C, 5) == 12);      // 3 * (K-1)
  CHECK_THROWS_AS(minimal_block_size(SchemeKind::A, 5, 5), std::invalid_argument);
  CHECK_THROWS_AS(minimal_block_size(SchemeKind::B, 6, 3), std::invalid_argument);
  CHECK_THROWS_AS(minimal_block_size(SchemeKind::C, 2), std::invalid_argument);
  CHECK_THROWS_AS(minimal_block_size(SchemeKind::Combined, 5), std::invalid_argument);
}
