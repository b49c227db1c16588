#include "dshuffle/groups.hpp"

#include <algorithm>
#include <functional>

namespace dshuffle {

DemandOwnerMatrix demand_owner_matrix(const Assignment& a_prev, const Assignment& a_cur) {
  if (a_prev.K != a_cur.K || a_prev.q != a_cur.q)
    throw std::invalid_argument("demand_owner_matrix: mismatched assignments");
  int K = a_cur.K;
  DemandOwnerMatrix m;
  m.K = K;
  m.q = a_cur.q;
  m.counts.assign(K + 1, std::vector<int>(K + 1, 0));
  for (int d = 1; d <= K; ++d)
    for (UnitId i : a_cur.units_of(d)) m.counts[d][a_prev.worker_of(i)]++;
  return m;
}

std::vector<Group> decompose_groups(const Assignment& a_prev, const Assignment& a_cur) {
  int K = a_cur.K, q = a_cur.q;
  if (auto err = validate_assignment(a_prev, K, q))
    throw std::invalid_argument("decompose_groups: invalid a_prev: " + *err);
  if (auto err = validate_assignment(a_cur, K, q))
    throw std::invalid_argument("decompose_groups: invalid a_cur: " + *err);

  // Remaining units bucketed by (demander, owner), each bucket ascending.
  std::map<std::pair<int, int>, std::vector<UnitId>> bucket;
  for (int d = 1; d <= K; ++d)
    for (UnitId i : a_cur.units_of(d)) bucket[{d, a_prev.worker_of(i)}].push_back(i);
  for (auto& [dk, v] : bucket) std::sort(v.begin(), v.end());

  std::vector<Group> groups;
  for (int round = 0; round < q; ++round) {
    // Perfect matching demander -> owner on the remaining multigraph.
    std::vector<int> match_owner(K + 1, 0);  // owner -> demander
    std::vector<int> match_dem(K + 1, 0);    // demander -> owner
    std::function<bool(int, std::vector<char>&)> augment = [&](int d, std::vector<char>& seen) {
      for (int o = 1; o <= K; ++o) {
        auto it = bucket.find({d, o});
        if (it == bucket.end() || it->second.empty() || seen[o]) continue;
        seen[o] = 1;
        if (match_owner[o] == 0 || augment(match_owner[o], seen)) {
          match_owner[o] = d;
          match_dem[d] = o;
          return true;
        }
      }
      return false;
    };
    for (int d = 1; d <= K; ++d) {
      std::vector<char> seen(K + 1, 0);
      if (!augment(d, seen))
        throw std::logic_error("decompose_groups: no perfect matching (regularity violated)");
    }
    Group g;
    g.units.resize(K);
    for (int d = 1; d <= K; ++d) {
      auto& units = bucket[{d, match_dem[d]}];
      UnitId u = units.front();
      units.erase(units.begin());
      g.units[d - 1] = u;
      g.demander[u] = d;
      g.owner[u] = match_dem[d];
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

WorkerSet idle_set(const Group& g) {
  WorkerSet u;
  for (int k = 1; k <= g.K(); ++k)
    if (g.owner_of_demand(k) == k) u.add(k);
  return u;
}

std::map<WorkerSet, std::set<SubBlockKey>> split_sets(const Group& g, int m) {
  int K = g.K();
  if (m < 1 || m > K) throw std::invalid_argument("split_sets: m out of range");
  WorkerSet U = idle_set(g);
  std::map<WorkerSet, std::set<SubBlockKey>> classes;
  classes[WorkerSet{}];  // the empty class always exists
  for (int k = 1; k <= K; ++k) {
    if (U.contains(k)) continue;
    UnitId i = g.unit_demanded_by(k);
    WorkerId o = g.owner.at(i);
    // All W with |W| = m, o in W, k not in W: pick m-1 extra workers.
    std::vector<int> rest;
    for (int v = 1; v <= K; ++v)
      if (v != o && v != k) rest.push_back(v);
    std::function<void(size_t, int, WorkerSet)> choose = [&](size_t from, int left, WorkerSet w) {
      if (left == 0) {
        WorkerSet cls;
        cls.mask = w.mask & U.mask;
        classes[cls].insert(SubBlockKey(i, w));
        return;
      }
      for (size_t j = from; j + left <= rest.size(); ++j)
        choose(j + 1, left - 1, w.with(rest[j]));
    };
    choose(0, m - 1, WorkerSet::of({o}));
  }
  // Drop empty non-root classes for a clean result.
  for (auto it = classes.begin(); it != classes.end();) {
    if (!it->first.empty() && it->second.empty()) it = classes.erase(it);
    else ++it;
  }
  return classes;
}

}  // namespace dshuffle
