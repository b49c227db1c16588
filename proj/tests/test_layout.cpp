#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>
#include <random>

#include "doctest.h"
#include "dshuffle/layout.hpp"

using namespace dshuffle;

namespace {

std::map<UnitId, BitBlock> random_units(int N, long long B, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<UnitId, BitBlock> units;
  for (UnitId i = 1; i <= N; ++i) units[i] = BitBlock::random(B, rng);
  return units;
}

// Ground-truth bits a whole key denotes, reading the state's slice table.
BitBlock true_bits(const StorageState& st, const std::map<UnitId, BitBlock>& units,
                   const SubBlockKey& key) {
  long long off = st.slice_index.at(key.whole()) * st.subblock_bits;
  return units.at(key.unit).slice(off, st.subblock_bits);
}

// Recovered blocks synthesized from ground truth: everything each worker's
// next holdings need that it does not already store, keyed by the source key
// in the current layout.
RecoveredBlocks synth_recovered(const StorageState& st, const StorageLayout& next,
                                const std::map<UnitId, BitBlock>& units) {
  RecoveredBlocks rec;
  bool bc = st.layout.kind.family == LayoutKind::Family::BC;
  for (const auto& [k, held] : next.holdings)
    for (const SubBlockKey& key : held) {
      SubBlockKey src = key;
      if (bc) {
        WorkerId o = st.layout.assign.worker_of(key.unit);
        WorkerId o2 = next.assign.worker_of(key.unit);
        if (o != o2 && !key.owners.contains(o))
          src = SubBlockKey(key.unit, key.owners.without(o2).with(o));
      }
      if (!st.layout.holds(k, src)) rec[k][src] = true_bits(st, units, src);
    }
  return rec;
}

}  // namespace

TEST_CASE("family A holdings counts and storage size") {
  for (int K = 3; K <= 6; ++K)
    for (int g = 1; g <= K - 1; ++g)
      for (int q : {1, 2}) {
        Assignment a = identity_assignment(K, q);
        StorageLayout lay = build_layout_a(K, q, g, a);
        CHECK(lay.subblocks_per_unit() == binom(K, g));
        CHECK(lay.kind.M_over_q(K) == Rational(K + g * (K - 1), K));
        long long own = q * binom(K, g);
        long long other = (long long)(K - 1) * q * binom(K - 1, g - 1);
        for (int k = 1; k <= K; ++k)
          CHECK((long long)lay.holdings.at(k).size() == own + other);
        // every assigned unit is held in full
        for (int k = 1; k <= K; ++k)
          for (UnitId i : a.units_of(k))
            for (const SubBlockKey& key : unit_subblocks(lay, i)) CHECK(lay.holds(k, key));
      }
}

TEST_CASE("family BC holdings counts and storage size") {
  for (int K = 3; K <= 6; ++K)
    for (int m = 1; m <= K; ++m)
      for (int q : {1, 2}) {
        Assignment a = identity_assignment(K, q);
        StorageLayout lay = build_layout_bc(K, q, m, a);
        CHECK(lay.subblocks_per_unit() == binom(K - 1, m - 1));
        CHECK(lay.kind.M_over_q(K) == Rational(m));
        long long own = q * binom(K - 1, m - 1);
        long long other = (long long)(K - 1) * q * binom(K - 2, m - 2);
        for (int k = 1; k <= K; ++k)
          CHECK((long long)lay.holdings.at(k).size() == own + other);
        // membership rule: worker k holds F_{i,W} iff k in W
        for (UnitId i = 1; i <= a.N(); ++i)
          for (const SubBlockKey& key : unit_subblocks(lay, i)) {
            CHECK(key.owners.contains(a.worker_of(i)));
            for (int k = 1; k <= K; ++k)
              CHECK(lay.holds(k, key) == key.owners.contains(k));
          }
      }
}

TEST_CASE("layouts are canonical in the assignment") {
  Assignment a = make_assignment(4, 2, {{3, 8}, {1, 6}, {2, 7}, {4, 5}});
  StorageLayout x = build_layout_bc(4, 2, 2, a);
  StorageLayout y = build_layout_bc(4, 2, 2, a);
  CHECK(x.holdings == y.holdings);
  StorageLayout z = build_layout_a(4, 2, 3, a);
  StorageLayout w = build_layout_a(4, 2, 3, a);
  CHECK(z.holdings == w.holdings);
}

TEST_CASE("unit subblocks are consistent with holdings") {
  Assignment a = make_assignment1({5, 1, 2, 3, 4});
  StorageLayout lay = build_layout_bc(5, 1, 3, a);
  for (UnitId i = 1; i <= 5; ++i) {
    auto keys = unit_subblocks(lay, i);
    CHECK((long long)keys.size() == lay.subblocks_per_unit());
    for (size_t j = 0; j + 1 < keys.size(); ++j) CHECK(keys[j] < keys[j + 1]);
    for (const SubBlockKey& key : keys) {
      CHECK(key.unit == i);
      CHECK(key.piece == 0);
      CHECK(key.owners.size() == 3);
    }
  }
}

TEST_CASE("subblock key rendering") {
  CHECK(SubBlockKey(3, WorkerSet::of({1, 4})).str() == "F3{1,4}");
  CHECK(SubBlockKey(3, WorkerSet::of({1, 4}), 2).str() == "F3{1,4}#2");
  CHECK(SubBlockKey(3, WorkerSet::of({1, 4}), 2).whole().str() == "F3{1,4}");
}

TEST_CASE("init_storage slices canonically and respects budget") {
  const int K = 5, q = 1;
  const long long B = 24;
  Assignment a = make_assignment1({5, 1, 2, 3, 4});
  auto units = random_units(K * q, B, 17);
  for (int m : {2, 3}) {
    StorageLayout lay = build_layout_bc(K, q, m, a);
    StorageState st = init_storage(lay, units);
    CHECK(st.B == B);
    CHECK(st.subblock_bits == B / lay.subblocks_per_unit());
    for (int k = 1; k <= K; ++k) {
      CHECK(st.stored_bits(k) == lay.kind.M_over_q(K).num * q * B / lay.kind.M_over_q(K).den);
      for (UnitId i : a.units_of(k)) CHECK(st.reassemble_unit(k, i) == units.at(i));
    }
    // stored bits match the canonical slice table
    for (const auto& [k, bag] : st.contents)
      for (const auto& [key, bits] : bag) CHECK(bits == true_bits(st, units, key));
    // slice indices of a unit are a permutation of 0..spu-1
    for (UnitId i = 1; i <= K * q; ++i) {
      std::set<int> seen;
      for (const SubBlockKey& key : unit_subblocks(lay, i)) seen.insert(st.slice_index.at(key));
      CHECK((long long)seen.size() == lay.subblocks_per_unit());
      CHECK(*seen.begin() == 0);
      CHECK(*seen.rbegin() == lay.subblocks_per_unit() - 1);
    }
  }
  StorageLayout ga = build_layout_a(K, q, 2, a);
  CHECK_THROWS_AS(init_storage(ga, random_units(K, 25, 1)), std::invalid_argument);
}

TEST_CASE("family A storage update matches a fresh build") {
  const int K = 4, q = 2, g = 2;
  const long long B = 12;  // C(4,2) = 6 subblocks of 2 bits
  Assignment a0 = identity_assignment(K, q);
  auto units = random_units(K * q, B, 23);
  StorageState st = init_storage(build_layout_a(K, q, g, a0), units);
  Assignment a1 = make_assignment(K, q, {{3, 4}, {5, 6}, {7, 8}, {1, 2}}, 1);
  StorageState st2 = update_storage_a(st, a1, synth_recovered(st, build_layout_a(K, q, g, a1), units));
  StorageLayout fresh = build_layout_a(K, q, g, a1);
  CHECK(st2.layout.holdings == fresh.holdings);
  CHECK(st2.layout.epoch == 1);
  for (int k = 1; k <= K; ++k) {
    for (UnitId i : a1.units_of(k)) CHECK(st2.reassemble_unit(k, i) == units.at(i));
    CHECK(st2.stored_bits(k) == st.stored_bits(k));
  }
  for (const auto& [k, bag] : st2.contents)
    for (const auto& [key, bits] : bag) CHECK(bits == true_bits(st2, units, key));
}

TEST_CASE("family BC storage update relabels owner sets") {
  const int K = 5, q = 1, m = 3;
  const long long B = 18;
  Assignment a0 = make_assignment1({5, 1, 2, 3, 4});
  auto units = random_units(K, B, 29);
  StorageState st = init_storage(build_layout_bc(K, q, m, a0), units);
  // two chained updates, the second from the first's state
  Assignment a1 = make_assignment1({1, 2, 3, 4, 5}, 1);
  Assignment a2 = make_assignment1({5, 1, 3, 4, 2}, 2);
  for (const Assignment& nxt : {a1, a2}) {
    StorageLayout fresh = build_layout_bc(K, q, m, nxt);
    st = update_storage_bc(st, nxt, synth_recovered(st, fresh, units));
    CHECK(st.layout.holdings == fresh.holdings);
    for (int k = 1; k <= K; ++k)
      for (UnitId i : nxt.units_of(k)) CHECK(st.reassemble_unit(k, i) == units.at(i));
    for (const auto& [k, bag] : st.contents)
      for (const auto& [key, bits] : bag) CHECK(bits == true_bits(st, units, key));
  }
  CHECK(st.layout.epoch == 2);
}

TEST_CASE("relabel_bc_key moves the old assignee out and the new one in") {
  // assignee 1 -> 4: a set without the new assignee swaps 1 out for 4
  CHECK(relabel_bc_key(SubBlockKey(7, WorkerSet::of({1, 3})), 1, 4) ==
        SubBlockKey(7, WorkerSet::of({3, 4})));
  // a set already containing the new assignee keeps its label
  SubBlockKey kept(7, WorkerSet::of({1, 4}));
  CHECK(relabel_bc_key(kept, 1, 4) == kept);
  // relabeling back with swapped roles is the identity
  SubBlockKey k2(2, WorkerSet::of({2, 3}));
  CHECK(relabel_bc_key(relabel_bc_key(k2, 2, 5), 5, 2) == k2);
}

TEST_CASE("state_dump lines are canonical") {
  Assignment a = make_assignment1({2, 1});
  // K = 2 is below every scheme's minimum but layouts themselves allow it
  StorageLayout lay = build_layout_bc(2, 1, 1, a);
  auto units = random_units(2, 4, 5);
  StorageState st = init_storage(lay, units);
  auto lines = state_dump(st);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].rfind("worker=1 key=F2{1} bits=4:", 0) == 0);
  CHECK(lines[1].rfind("worker=2 key=F1{2} bits=4:", 0) == 0);
}
