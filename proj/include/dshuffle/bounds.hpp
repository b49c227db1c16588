#pragma once

// Communication-load bounds for the shuffling problem: the decentralized
// converse envelope, a per-shuffle lower bound computed from an explicit
// storage realization, and the centralized / index-coding reference curves
// used for gap and cost ratios.

#include <map>
#include <utility>
#include <vector>

#include "dshuffle/core.hpp"
#include "dshuffle/layout.hpp"

namespace dshuffle {

// Piecewise-linear curve over M/q given by its corner points (ascending M/q).
struct BoundCurve {
  std::vector<std::pair<Rational, Rational>> corners;  // (M/q, R/q)

  // Evaluate by exact linear interpolation between adjacent corners.
  // Throws std::invalid_argument outside [corners.front, corners.back].
  Rational at(const Rational& M_over_q) const;
};

// Decentralized converse corner at M/q = m: (K-m)/m * K/(K-1).
Rational converse_corner(int K, int m);
// Corners (m, converse_corner(K,m)) for m = 1..K.
BoundCurve converse_curve(int K);
Rational converse_envelope_at(int K, const Rational& M_over_q);

// Lower bound on the normalized total load of one shuffle, given the exact
// sub-block sizes of an uncoded storage realization at the previous epoch.
// `sizes` maps each sub-block (unit, exclusive storer set, piece 0) to its
// size in bits; zero sizes are fine. `d` has length K, 1-based values, and
// says worker k takes the batch previously assigned to worker d[k-1]; it
// must be a derangement. Per-unit totals must agree (they define B).
Rational per_shuffle_lower_bound(const std::map<SubBlockKey, long long>& sizes,
                                 const std::vector<int>& d, const Assignment& a_prev);

// Fraction x_m of every unit stored exclusively at each set size m = 1..K
// (x[m-1] is the weight of size m). Weights are nonnegative and sum to 1.
struct StorageProfile {
  std::vector<Rational> x;
};

// Bound implied by a storage profile: sum_m x_m * converse_corner(K, m).
Rational profile_bound(int K, const StorageProfile& profile);

// Centralized shuffling references at integer parameter value:
// converse (K-m)/m at M/q = m, achievable (K-g)/(g+1) at M/q = 1+g(K-1)/K.
struct CentralizedBounds {
  Rational converse;
  Rational achievable;
};
CentralizedBounds centralized_bounds(int K, int param);
BoundCurve centralized_curve(int K);  // corners (m, (K-m)/m), optimal envelope
Rational centralized_envelope_at(int K, const Rational& M_over_q);

// Straightforward index-coding baseline embedded in the decentralized
// problem: 2(K-m)/m at M/q = m. Always 2(K-1)/K times the converse corner.
Rational embedded_ic_baseline(int K, int m);
BoundCurve embedded_curve(int K);
Rational embedded_envelope_at(int K, const Rational& M_over_q);

// Achievable-over-converse ratio of the combined scheme; 1 at M/q = K where
// both curves hit zero.
Rational optimality_gap(int K, const Rational& M_over_q);

// Combined-scheme load over the centralized optimum; K/(K-1) at M/q = K.
Rational p2p_cost(int K, const Rational& M_over_q);

// Exact sub-block sizes of a storage state keyed by exclusive storer set,
// in the shape per_shuffle_lower_bound expects. Family-A keys add the
// assignee to the owner set; BC keys already carry the full storer set.
std::map<SubBlockKey, long long> realized_sizes(const StorageState& state);

}  // namespace dshuffle
