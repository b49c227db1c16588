#pragma once

#include <map>
#include <string>
#include <vector>

#include "dshuffle/core.hpp"
#include "dshuffle/groups.hpp"
#include "dshuffle/layout.hpp"

// Shuffle-phase encoders and the universal decoder.
//
// Encoders turn (storage state at t-1, assignment for t) into a broadcast
// plan. Every message is an XOR of equal-length sub-block (pieces of)
// contents the sender stores; the decoder reconstructs each worker's missing
// sub-blocks from its own t-1 storage plus the plan, by GF(2) elimination
// over the unknown components. The decoder doubles as the encoding auditor:
// audit_plan re-derives every payload from the sender's storage view.

namespace dshuffle {

struct BroadcastMessage {
  WorkerId sender = 0;
  BitBlock payload;
  std::vector<SubBlockKey> components;  // ordered; all spans have equal length
  std::string tag;
};

struct ShufflePlan {
  SchemeKind scheme = SchemeKind::Uncoded;
  int K = 0;
  int q = 0;
  long long B = 0;
  std::vector<BroadcastMessage> messages;
};

struct LoadReport {
  std::map<WorkerId, long long> per_worker_bits;
  long long total_bits = 0;
  Rational normalized;  // total_bits / B
};

LoadReport make_load_report(const ShufflePlan& plan);

// Bit range a component key denotes inside its whole sub-block. Piece 0 is
// the whole sub-block; scheme C splits into thirds indexed 1..3; all other
// schemes index pieces by the owners of the key (rank among the sorted set).
struct PieceSpan {
  long long offset = 0;
  long long length = 0;
};
PieceSpan piece_span(SchemeKind scheme, const StorageLayout& layout, long long B,
                     const SubBlockKey& key);

// Encoders. The layout family/parameter must match the scheme (uncoded: BC
// m=1; A: family A; B: BC m in {K-2, K-1}; C: BC m=2). At m=K every worker
// already stores everything and no encoder is needed.
ShufflePlan encode_uncoded(const StorageState& state, const Assignment& a_next);
ShufflePlan encode_scheme_a(const StorageState& state, const Assignment& a_next);
ShufflePlan encode_scheme_b(const StorageState& state, const Assignment& a_next);
ShufflePlan encode_scheme_c(const StorageState& state, const Assignment& a_next);
ShufflePlan encode_for(SchemeKind scheme, const StorageState& state, const Assignment& a_next);

// Everything worker k misses for its new batch, reconstructed from its own
// t-1 storage and the broadcast plan only. Keys are whole sub-block keys of
// the t-1 layout. Throws if anything needed is undecodable.
std::map<SubBlockKey, BitBlock> decode_worker(const StorageState& state, WorkerId k,
                                              const ShufflePlan& plan, const Assignment& a_next);

// Re-derives every payload from the sender's own stored bits; throws on any
// violation of the encoding constraint or on a malformed message.
void audit_plan(const StorageState& state, const ShufflePlan& plan);

// Worst-case communication load per data unit of q, as R/q:
//   uncoded: K;  A: (K-g)/g;  B: (K-m)K/(m(K-1)), m in {K-2,K-1,K};
//   C: 2K(K-2)/(3(K-1)).
Rational scheme_load_formula(SchemeKind scheme, int K, int param);

// ---------------------------------------------------------------------------
// Memory sharing. The achievable region is the lower convex envelope of the
// pure-scheme corner points; between corners two schemes time-share the
// block.

struct MixComponent {
  SchemeKind scheme = SchemeKind::Uncoded;
  int param = 0;         // g or m of the corner scheme
  Rational weight;       // fraction of each data unit handled by this part
  Rational m_over_q;     // the corner's storage point
  Rational load_over_q;  // the corner's worst-case load
};

// Corner points (including collinear scheme-A corners) of the achievable
// envelope, ascending in M/q from 1 to K.
std::vector<MixComponent> combined_corners(int K);

// Envelope value at M/q in [1, K].
Rational combined_load_at(int K, const Rational& M_over_q);

// One component at a corner, two (with weights summing to 1) between.
std::vector<MixComponent> combined_plan(int K, const Rational& M_over_q);

// Smallest B for which every part of the mixture at M/q gets an integral
// block count: weight_i * B must be a positive multiple of the part's
// minimal block size.
long long mixture_min_block(int K, const Rational& M_over_q);

}  // namespace dshuffle
