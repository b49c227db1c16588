#include "dshuffle/bounds.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "dshuffle/schemes.hpp"

namespace dshuffle {

namespace {

[[noreturn]] void fail_arg(const std::string& msg) { throw std::invalid_argument(msg); }

void check_k(int K) {
  if (K < 2) fail_arg("K must be at least 2, got " + std::to_string(K));
}

}  // namespace

Rational BoundCurve::at(const Rational& M_over_q) const {
  if (corners.empty()) fail_arg("empty bound curve");
  if (M_over_q < corners.front().first || M_over_q > corners.back().first)
    fail_arg("storage point " + M_over_q.str() + " outside curve range [" +
             corners.front().first.str() + ", " + corners.back().first.str() + "]");
  for (std::size_t i = 0; i < corners.size(); ++i) {
    if (M_over_q == corners[i].first) return corners[i].second;
    if (i + 1 < corners.size() && M_over_q < corners[i + 1].first) {
      const auto& [m0, r0] = corners[i];
      const auto& [m1, r1] = corners[i + 1];
      Rational t = (M_over_q - m0) / (m1 - m0);
      return r0 + t * (r1 - r0);
    }
  }
  fail_arg("curve evaluation failed at " + M_over_q.str());
}

Rational converse_corner(int K, int m) {
  check_k(K);
  if (m < 1 || m > K) fail_arg("m must be in [1..K], got " + std::to_string(m));
  return Rational((long long)(K - m) * K, (long long)m * (K - 1));
}

BoundCurve converse_curve(int K) {
  check_k(K);
  BoundCurve c;
  for (int m = 1; m <= K; ++m) c.corners.push_back({Rational(m), converse_corner(K, m)});
  return c;
}

Rational converse_envelope_at(int K, const Rational& M_over_q) {
  return converse_curve(K).at(M_over_q);
}

Rational per_shuffle_lower_bound(const std::map<SubBlockKey, long long>& sizes,
                                 const std::vector<int>& d, const Assignment& a_prev) {
  const int K = a_prev.K;
  if (auto err = validate_assignment(a_prev, K, a_prev.q))
    fail_arg("bad previous assignment: " + *err);
  if ((int)d.size() != K) fail_arg("d must have length K");
  std::set<int> seen;
  for (int k = 1; k <= K; ++k) {
    int v = d[k - 1];
    if (v < 1 || v > K || !seen.insert(v).second) fail_arg("d is not a permutation of [1..K]");
    if (v == k) fail_arg("d is not a derangement: d[" + std::to_string(k) + "] = " + std::to_string(k));
  }

  const int N = a_prev.N();
  std::vector<std::vector<std::pair<WorkerSet, long long>>> per_unit(N + 1);
  std::vector<long long> total(N + 1, 0);
  for (const auto& [key, bits] : sizes) {
    if (bits < 0) fail_arg("malformed sizes: negative size for " + key.str());
    if (key.piece != 0) fail_arg("malformed sizes: piece-indexed key " + key.str());
    if (key.unit < 1 || key.unit > N) fail_arg("malformed sizes: unit out of range in " + key.str());
    WorkerId owner = a_prev.worker_of(key.unit);
    if (!key.owners.contains(owner))
      fail_arg("malformed sizes: storer set of " + key.str() + " omits the assignee");
    if (key.owners.empty() || key.owners.elements().back() > K)
      fail_arg("malformed sizes: bad storer set in " + key.str());
    per_unit[key.unit].push_back({key.owners, bits});
    total[key.unit] += bits;
  }
  for (UnitId i = 2; i <= N; ++i)
    if (total[i] != total[1])
      fail_arg("malformed sizes: unit totals differ (unit 1 has " + std::to_string(total[1]) +
               " bits, unit " + std::to_string(i) + " has " + std::to_string(total[i]) + ")");
  const long long B = N >= 1 ? total[1] : 0;
  if (B == 0) return Rational(0);

  // sum over workers k and newly demanded units i of the per-size term
  // |F_{i,W}| / (|W| * B) restricted to sub-blocks k does not store.
  Rational acc(0);
  for (WorkerId k = 1; k <= K; ++k)
    for (UnitId i : a_prev.batches[d[k - 1]])
      for (const auto& [storers, bits] : per_unit[i])
        if (!storers.contains(k) && bits > 0) acc = acc + Rational(bits, storers.size());
  return acc / Rational(B);
}

Rational profile_bound(int K, const StorageProfile& profile) {
  check_k(K);
  if ((int)profile.x.size() != K) fail_arg("profile must carry one weight per set size 1..K");
  Rational sum(0), bound(0);
  for (int m = 1; m <= K; ++m) {
    const Rational& xm = profile.x[m - 1];
    if (xm < Rational(0)) fail_arg("profile weight for m=" + std::to_string(m) + " is negative");
    sum = sum + xm;
    bound = bound + xm * converse_corner(K, m);
  }
  if (sum != Rational(1)) fail_arg("profile weights sum to " + sum.str() + ", expected 1");
  return bound;
}

CentralizedBounds centralized_bounds(int K, int param) {
  check_k(K);
  if (param < 1 || param > K) fail_arg("parameter must be in [1..K], got " + std::to_string(param));
  return {Rational(K - param, param), Rational(K - param, param + 1)};
}

BoundCurve centralized_curve(int K) {
  check_k(K);
  BoundCurve c;
  for (int m = 1; m <= K; ++m) c.corners.push_back({Rational(m), Rational(K - m, m)});
  return c;
}

Rational centralized_envelope_at(int K, const Rational& M_over_q) {
  return centralized_curve(K).at(M_over_q);
}

Rational embedded_ic_baseline(int K, int m) {
  check_k(K);
  if (m < 1 || m > K) fail_arg("m must be in [1..K], got " + std::to_string(m));
  return Rational(2 * (long long)(K - m), m);
}

BoundCurve embedded_curve(int K) {
  check_k(K);
  BoundCurve c;
  for (int m = 1; m <= K; ++m) c.corners.push_back({Rational(m), embedded_ic_baseline(K, m)});
  return c;
}

Rational embedded_envelope_at(int K, const Rational& M_over_q) {
  return embedded_curve(K).at(M_over_q);
}

Rational optimality_gap(int K, const Rational& M_over_q) {
  check_k(K);
  if (M_over_q == Rational(K)) return Rational(1);  // 0/0 corner, both curves vanish
  return combined_load_at(K, M_over_q) / converse_envelope_at(K, M_over_q);
}

Rational p2p_cost(int K, const Rational& M_over_q) {
  check_k(K);
  if (M_over_q == Rational(K)) return Rational(K, K - 1);  // shared-slope limit
  return combined_load_at(K, M_over_q) / centralized_envelope_at(K, M_over_q);
}

std::map<SubBlockKey, long long> realized_sizes(const StorageState& state) {
  const StorageLayout& lay = state.layout;
  const bool fam_a = lay.kind.family == LayoutKind::Family::A;
  std::map<SubBlockKey, long long> sizes;
  for (UnitId i = 1; i <= lay.assign.N(); ++i) {
    WorkerId owner = lay.assign.worker_of(i);
    for (const SubBlockKey& key : unit_subblocks(lay, i)) {
      WorkerSet storers = key.owners;
      if (fam_a) storers.add(owner);
      sizes[SubBlockKey{i, storers}] += state.subblock_bits;
    }
  }
  return sizes;
}

}  // namespace dshuffle
