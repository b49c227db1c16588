#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dshuffle/core.hpp"

// Storage layouts: which sub-block keys each worker holds, and storage
// states binding actual bits (slices of the original units) to those keys.
//
// Two layout families exist:
//   * family A (parameter g): unit i is split into the C(K,g) sub-blocks
//     G_{i,W} over all |W|=g; worker k holds every sub-block of its assigned
//     units plus G_{i,W} with k in W for the rest.
//   * family BC (parameter m): unit i is split into the C(K-1,m-1)
//     sub-blocks F_{i,W} over |W|=m with the current assignee in W; worker k
//     holds F_{i,W} iff k in W (assignees hold everything by membership).
//
// A layout is a canonical function of (family, parameter, assignment): two
// builds from equal inputs compare equal key-for-key. Bits are another
// matter: after BC storage updates the slice a key denotes depends on
// assignment history, so StorageState tracks an explicit slice index.

namespace dshuffle {

struct LayoutKind {
  enum class Family { A, BC };
  Family family = Family::BC;
  int param = 1;  // g for family A, m for family BC

  bool operator==(const LayoutKind&) const = default;
  Rational M_over_q(int K) const;  // per-worker storage in units of q*B
  std::string str() const;
};

struct SubBlockKey {
  UnitId unit = 0;
  WorkerSet owners;
  int piece = 0;  // 0 = whole sub-block; otherwise a sub-piece index

  SubBlockKey() = default;
  SubBlockKey(UnitId i, WorkerSet w, int p = 0) : unit(i), owners(w), piece(p) {}

  SubBlockKey whole() const { return SubBlockKey(unit, owners, 0); }
  bool operator==(const SubBlockKey&) const = default;
  auto operator<=>(const SubBlockKey&) const = default;
  std::string str() const;  // "F3{1,4}" or "F3{1,4}#2"
};

struct StorageLayout {
  LayoutKind kind;
  int K = 0;
  int q = 0;
  int epoch = 0;
  Assignment assign;                               // A^epoch
  std::map<WorkerId, std::set<SubBlockKey>> holdings;

  long long subblocks_per_unit() const;
  bool holds(WorkerId k, const SubBlockKey& key) const;
};

StorageLayout build_layout_a(int K, int q, int g, const Assignment& a);
StorageLayout build_layout_bc(int K, int q, int m, const Assignment& a);

// All sub-block keys of unit i in the layout (piece 0), canonical order.
std::vector<SubBlockKey> unit_subblocks(const StorageLayout& layout, UnitId i);

struct StorageState {
  StorageLayout layout;
  long long B = 0;
  long long subblock_bits = 0;                        // B / subblocks_per_unit
  std::map<WorkerId, std::map<SubBlockKey, BitBlock>> contents;
  std::map<SubBlockKey, int> slice_index;             // whole key -> slice position in its unit

  const BitBlock& bits_of(WorkerId k, const SubBlockKey& key) const;
  long long stored_bits(WorkerId k) const;
  // Reassemble unit i from any worker that holds all of its sub-blocks.
  BitBlock reassemble_unit(WorkerId k, UnitId i) const;
};

// Slice every unit canonically (lexicographic key order) and hand each
// worker the sub-blocks its holdings prescribe. units maps unit id -> B
// bits; B must be a positive multiple of subblocks_per_unit.
StorageState init_storage(const StorageLayout& layout, const std::map<UnitId, BitBlock>& units);

// Per-worker decoded sub-blocks (whole keys of the t-1 layout).
using RecoveredBlocks = std::map<WorkerId, std::map<SubBlockKey, BitBlock>>;

// Move to assignment a_next. Family A evicts the variable part and inserts
// the new one; family BC relabels owner sets so the result is structurally
// identical to a fresh build for a_next. recovered must contain whatever a
// worker needs but did not store at t-1.
StorageState update_storage_a(const StorageState& state, const Assignment& a_next,
                              const RecoveredBlocks& recovered);
StorageState update_storage_bc(const StorageState& state, const Assignment& a_next,
                               const RecoveredBlocks& recovered);

// BC owner-set relabeling for unit i moving from assignee o to o_next:
// returns the key in the new layout carrying the same bits.
SubBlockKey relabel_bc_key(const SubBlockKey& key, WorkerId o, WorkerId o_next);

// Canonical dump, one line per (worker, key): "worker=1 key=F1{1,2} bits=4:a".
std::vector<std::string> state_dump(const StorageState& state);

}  // namespace dshuffle
