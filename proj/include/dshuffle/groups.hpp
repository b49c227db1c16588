#pragma once

#include <map>
#include <set>
#include <vector>

#include "dshuffle/core.hpp"
#include "dshuffle/layout.hpp"

// Group decomposition of a shuffle. A shuffle from A^{t-1} to A^t induces a
// K x K demand/ownership matrix with row and column sums q; it always
// decomposes into q groups, each containing exactly one unit demanded by
// every worker and one unit previously owned by every worker. Groups are
// independent single-demand subproblems for schemes B and C.

namespace dshuffle {

struct Group {
  // units[k-1] is the unit demanded by worker k within this group.
  std::vector<UnitId> units;
  std::map<UnitId, WorkerId> demander;  // u^t_i
  std::map<UnitId, WorkerId> owner;     // u^{t-1}_i

  int K() const { return (int)units.size(); }
  UnitId unit_demanded_by(WorkerId k) const { return units.at(k - 1); }
  WorkerId owner_of_demand(WorkerId k) const { return owner.at(unit_demanded_by(k)); }
};

struct DemandOwnerMatrix {
  int K = 0;
  int q = 0;
  // counts[d][o] = number of units demanded by worker d that worker o owned.
  std::vector<std::vector<int>> counts;
};

DemandOwnerMatrix demand_owner_matrix(const Assignment& a_prev, const Assignment& a_cur);

// Deterministic decomposition: q rounds of bipartite perfect matching via
// augmenting paths, scanning workers and owners in ascending order; within a
// matched (demander, owner) cell the lowest remaining unit id is taken.
std::vector<Group> decompose_groups(const Assignment& a_prev, const Assignment& a_cur);

// Workers whose demanded unit in the group is the one they already owned.
WorkerSet idle_set(const Group& g);

// Partition of the group's missing desired sub-blocks by their overlap with
// the idle set: for every k not idle and every |W|=m with owner(d_k) in W
// and k not in W, the key F_{d_k,W} lands in the class indexed by W cap U.
// Only nonempty classes are returned (the empty-set class is always
// present, possibly empty, so callers can treat it uniformly).
std::map<WorkerSet, std::set<SubBlockKey>> split_sets(const Group& g, int m);

}  // namespace dshuffle
