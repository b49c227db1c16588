#include "dshuffle/schemes.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dshuffle {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void subsets_rec(int K, int s, int start, WorkerSet cur, std::vector<WorkerSet>& out) {
  if (cur.size() == s) {
    out.push_back(cur);
    return;
  }
  for (int w = start; w <= K - (s - cur.size()) + 1; ++w)
    subsets_rec(K, s, w + 1, cur.with(w), out);
}

/* all size-s subsets of [1..K], ascending */
std::vector<WorkerSet> subsets_of(int K, int s) {
  std::vector<WorkerSet> out;
  if (s >= 0 && s <= K) subsets_rec(K, s, 1, WorkerSet{}, out);
  return out;
}

void check_scheme_layout(SchemeKind scheme, const StorageState& state) {
  const StorageLayout& lay = state.layout;
  const int K = lay.K;
  switch (scheme) {
    case SchemeKind::Uncoded:
      if (lay.kind.family != LayoutKind::Family::BC || lay.kind.param != 1)
        fail("uncoded shuffle needs the BC layout with m=1");
      break;
    case SchemeKind::A:
      if (lay.kind.family != LayoutKind::Family::A) fail("scheme A needs a family-A layout");
      if (lay.kind.param < 1 || lay.kind.param > K - 1) fail("scheme A needs 1 <= g <= K-1");
      break;
    case SchemeKind::B:
      if (lay.kind.family != LayoutKind::Family::BC) fail("scheme B needs a BC layout");
      if (lay.kind.param != K - 2 && lay.kind.param != K - 1)
        fail("the scheme B encoder supports m in {K-2, K-1} only");
      if (lay.kind.param < 1) fail("scheme B needs m >= 1");
      break;
    case SchemeKind::C:
      if (K < 3) fail("scheme C needs K >= 3");
      if (lay.kind.family != LayoutKind::Family::BC || lay.kind.param != 2)
        fail("scheme C needs the BC layout with m=2");
      break;
    case SchemeKind::Combined:
      fail("a mixture is encoded part by part, not as one scheme");
  }
  long long minb = minimal_block_size(scheme, K, lay.kind.param);
  if (state.B % minb != 0)
    fail("block size " + std::to_string(state.B) + " is not a multiple of the minimal size " +
         std::to_string(minb) + " for scheme " + scheme_name(scheme));
}

void check_next_assignment(const StorageState& state, const Assignment& a_next) {
  if (auto err = validate_assignment(a_next, state.layout.K, state.layout.q))
    throw std::invalid_argument("bad next assignment: " + *err);
}

ShufflePlan new_plan(SchemeKind scheme, const StorageState& state) {
  ShufflePlan plan;
  plan.scheme = scheme;
  plan.K = state.layout.K;
  plan.q = state.layout.q;
  plan.B = state.B;
  return plan;
}

BitBlock span_bits(const StorageState& state, SchemeKind scheme, WorkerId w,
                   const SubBlockKey& comp) {
  const BitBlock& whole = state.bits_of(w, comp.whole());
  PieceSpan sp = piece_span(scheme, state.layout, state.B, comp);
  return whole.slice(sp.offset, sp.length);
}

void push_message(ShufflePlan& plan, const StorageState& state, WorkerId sender,
                  std::vector<SubBlockKey> comps, std::string tag) {
  if (comps.empty()) return;
  BitBlock payload;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    BitBlock part = span_bits(state, plan.scheme, sender, comps[i]);
    if (i == 0) {
      payload = std::move(part);
    } else {
      if (part.size() != payload.size())
        fail("components of unequal length in one message: " + tag);
      payload = xor_zero_pad(payload, part);
    }
  }
  plan.messages.push_back(BroadcastMessage{sender, std::move(payload), std::move(comps),
                                           std::move(tag)});
}

/* units worker k processes at t but did not at t-1, ascending */
std::vector<UnitId> new_units(const Assignment& prev, const Assignment& next, WorkerId k) {
  std::vector<UnitId> out;
  for (UnitId i : next.units_of(k))
    if (!prev.assigned_to(i, k)) out.push_back(i);
  return out;
}

/* the excluded worker of a BC key that is not the block's demander */
WorkerId excluded_non_demander(int K, const SubBlockKey& key, WorkerId demander) {
  for (int w = 1; w <= K; ++w)
    if (!key.owners.contains(w) && w != demander) return w;
  fail("no excluded worker besides the demander in " + key.str());
}

std::string group_tag(std::size_t gi, const WorkerSet& cls) {
  return "g=" + std::to_string(gi) + " cls=" + cls.str();
}

}  // namespace

PieceSpan piece_span(SchemeKind scheme, const StorageLayout& layout, long long B,
                     const SubBlockKey& key) {
  long long L = B / layout.subblocks_per_unit();
  if (key.piece == 0) return {0, L};
  if (scheme == SchemeKind::C) {
    if (key.piece < 1 || key.piece > 3) fail("scheme C pieces are indexed 1..3: " + key.str());
    if (L % 3 != 0) fail("sub-block length not divisible by 3: " + key.str());
    return {(key.piece - 1) * (L / 3), L / 3};
  }
  if (!key.owners.contains(key.piece))
    fail("piece index " + std::to_string(key.piece) + " is not an owner in " + key.str());
  int den = key.owners.size();
  if (L % den != 0)
    fail("sub-block length not divisible by " + std::to_string(den) + ": " + key.str());
  long long plen = L / den;
  return {key.owners.rank_of(key.piece) * plen, plen};
}

LoadReport make_load_report(const ShufflePlan& plan) {
  LoadReport r;
  for (WorkerId k = 1; k <= plan.K; ++k) r.per_worker_bits[k] = 0;
  for (const BroadcastMessage& msg : plan.messages) {
    r.per_worker_bits[msg.sender] += msg.payload.size();
    r.total_bits += msg.payload.size();
  }
  if (plan.B <= 0) fail("load report needs a positive block size");
  r.normalized = Rational(r.total_bits, plan.B);
  return r;
}

ShufflePlan encode_uncoded(const StorageState& state, const Assignment& a_next) {
  check_scheme_layout(SchemeKind::Uncoded, state);
  check_next_assignment(state, a_next);
  ShufflePlan plan = new_plan(SchemeKind::Uncoded, state);
  const Assignment& prev = state.layout.assign;
  for (UnitId i = 1; i <= prev.N(); ++i) {
    WorkerId o = prev.worker_of(i);
    if (a_next.worker_of(i) == o) continue;
    SubBlockKey key(i, WorkerSet::of({o}));
    push_message(plan, state, o, {key}, "unit=" + std::to_string(i));
  }
  return plan;
}

ShufflePlan encode_scheme_a(const StorageState& state, const Assignment& a_next) {
  check_scheme_layout(SchemeKind::A, state);
  check_next_assignment(state, a_next);
  ShufflePlan plan = new_plan(SchemeKind::A, state);
  const StorageLayout& lay = state.layout;
  const int K = lay.K, q = lay.q, g = lay.kind.param;

  std::vector<std::vector<UnitId>> delta(K + 1);
  for (WorkerId k = 1; k <= K; ++k) delta[k] = new_units(lay.assign, a_next, k);

  for (const WorkerSet& J : subsets_of(K, g + 1)) {
    for (WorkerId j : J.elements()) {
      for (int p = 1; p <= q; ++p) {
        std::vector<SubBlockKey> comps;
        for (WorkerId k : J.elements()) {
          if (k == j || (int)delta[k].size() < p) continue;
          comps.emplace_back(delta[k][p - 1], J.without(k), j);
        }
        push_message(plan, state, j, std::move(comps),
                     "J=" + J.str() + " j=" + std::to_string(j) + " p=" + std::to_string(p));
      }
    }
  }
  return plan;
}

namespace {

/* the fat difference family of class cls == U: one V_J per excluded worker
   x in E, keyed and sent as base xor V_J by the lowest idle worker */
void encode_b_class_idle(ShufflePlan& plan, const StorageState& state, const Group& grp,
                         std::size_t gi, const WorkerSet& cls,
                         const std::set<SubBlockKey>& blocks) {
  const int K = grp.K();
  std::map<int, std::vector<SubBlockKey>> family;  // excluded x -> V_J components
  for (const SubBlockKey& b : blocks)
    family[excluded_non_demander(K, b, grp.demander.at(b.unit))].push_back(b);
  for (auto& [x, comps] : family) std::sort(comps.begin(), comps.end());

  auto it = family.begin();
  const int x_base = it->first;
  const std::vector<SubBlockKey>& base = it->second;
  const WorkerId sender = cls.elements().front();
  const std::string base_j = WorkerSet::full(K).without(x_base).str();
  for (++it; it != family.end(); ++it) {
    std::vector<SubBlockKey> comps = base;
    comps.insert(comps.end(), it->second.begin(), it->second.end());
    push_message(plan, state, sender, std::move(comps),
                 group_tag(gi, cls) + " diff J=" + WorkerSet::full(K).without(it->first).str() +
                     " base J=" + base_j);
  }
}

/* class cls == U minus one idle worker u: the single set V_{[K] minus u},
   broadcast bare by the lowest worker of cls */
void encode_b_class_near_idle(ShufflePlan& plan, const StorageState& state, std::size_t gi,
                              const WorkerSet& cls, WorkerId u,
                              const std::set<SubBlockKey>& blocks) {
  const int K = state.layout.K;
  std::vector<SubBlockKey> comps(blocks.begin(), blocks.end());
  push_message(plan, state, cls.elements().front(), std::move(comps),
               group_tag(gi, cls) + " bare J=" + WorkerSet::full(K).without(u).str());
}

/* empty class of a fully active group: one bare V_{[K] minus x} per worker x,
   sent by the worker that demands the unit x previously owned */
void encode_b_class_active(ShufflePlan& plan, const StorageState& state, const Group& grp,
                           std::size_t gi, const std::set<SubBlockKey>& blocks) {
  const int K = grp.K();
  std::map<int, std::vector<SubBlockKey>> family;
  for (const SubBlockKey& b : blocks)
    family[excluded_non_demander(K, b, grp.demander.at(b.unit))].push_back(b);
  for (auto& [x, comps] : family) {
    std::sort(comps.begin(), comps.end());
    UnitId owned = 0;
    for (UnitId u : grp.units)
      if (grp.owner.at(u) == x) owned = u;
    if (owned == 0) fail("group has no unit previously owned by worker " + std::to_string(x));
    push_message(plan, state, grp.demander.at(owned), std::move(comps),
                 group_tag(gi, WorkerSet{}) + " bare J=" +
                     WorkerSet::full(K).without(x).str());
  }
}

/* empty class with exactly one idle worker: the single-demand subproblem on
   E = [K] minus U, solved like scheme B at m = K-1 on K-1 workers */
void encode_b_class_recursive(ShufflePlan& plan, const StorageState& state, const Group& grp,
                              std::size_t gi, const WorkerSet& idle,
                              const std::set<SubBlockKey>& blocks) {
  WorkerSet eset = WorkerSet::full(grp.K());
  for (int u : idle.elements()) eset.remove(u);

  std::set<SubBlockKey> expect;
  for (WorkerId k : eset.elements())
    expect.emplace(grp.unit_demanded_by(k), eset.without(k));
  if (expect != blocks) fail("recursive class does not match its expected block set");

  for (WorkerId j : eset.elements()) {
    std::vector<SubBlockKey> comps;
    for (WorkerId k : eset.elements()) {
      if (k == j) continue;
      comps.emplace_back(grp.unit_demanded_by(k), eset.without(k), j);
    }
    push_message(plan, state, j, std::move(comps),
                 group_tag(gi, WorkerSet{}) + " rec j=" + std::to_string(j));
  }
}

}  // namespace

ShufflePlan encode_scheme_b(const StorageState& state, const Assignment& a_next) {
  check_scheme_layout(SchemeKind::B, state);
  check_next_assignment(state, a_next);
  ShufflePlan plan = new_plan(SchemeKind::B, state);
  const StorageLayout& lay = state.layout;
  const int K = lay.K, q = lay.q, m = lay.kind.param;

  if (m == K - 1) {
    std::vector<std::vector<UnitId>> delta(K + 1);
    for (WorkerId k = 1; k <= K; ++k) delta[k] = new_units(lay.assign, a_next, k);
    for (WorkerId j = 1; j <= K; ++j) {
      for (int p = 1; p <= q; ++p) {
        std::vector<SubBlockKey> comps;
        for (WorkerId k = 1; k <= K; ++k) {
          if (k == j || (int)delta[k].size() < p) continue;
          comps.emplace_back(delta[k][p - 1], WorkerSet::full(K).without(k), j);
        }
        push_message(plan, state, j, std::move(comps),
                     "j=" + std::to_string(j) + " p=" + std::to_string(p));
      }
    }
    return plan;
  }

  // m == K-2: groups are independent single-demand subproblems
  const std::vector<Group> groups = decompose_groups(lay.assign, a_next);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const Group& grp = groups[gi];
    const WorkerSet idle = idle_set(grp);
    for (const auto& [cls, blocks] : split_sets(grp, m)) {
      if (blocks.empty()) continue;
      if (!idle.empty() && cls == idle) {
        encode_b_class_idle(plan, state, grp, gi + 1, cls, blocks);
      } else if (!cls.empty() && (cls.mask & ~idle.mask) == 0 &&
                 cls.size() == idle.size() - 1) {
        const WorkerId u = WorkerSet{idle.mask & ~cls.mask}.elements().front();
        encode_b_class_near_idle(plan, state, gi + 1, cls, u, blocks);
      } else if (cls.empty() && idle.empty()) {
        encode_b_class_active(plan, state, grp, gi + 1, blocks);
      } else if (cls.empty() && idle.size() == 1) {
        encode_b_class_recursive(plan, state, grp, gi + 1, idle, blocks);
      } else {
        fail("unexpected nonempty split class " + cls.str());
      }
    }
  }
  return plan;
}

namespace {

/* delivery of class cls == {u}: walk each cycle of the ownership permutation
   on the active workers; a 2-cycle gets its pair bare, longer cycles get
   consecutive differences; the idle worker u stores everything and sends */
void encode_c_class_idle(ShufflePlan& plan, const StorageState& state, const Group& grp,
                         std::size_t gi, WorkerId u, const std::set<SubBlockKey>& blocks) {
  const int K = grp.K();
  const WorkerSet idle = idle_set(grp);
  std::vector<WorkerId> active;
  for (WorkerId k = 1; k <= K; ++k)
    if (!idle.contains(k)) active.push_back(k);

  auto block_of = [&](WorkerId k) {
    return SubBlockKey(grp.unit_demanded_by(k), WorkerSet::of({grp.owner_of_demand(k), u}));
  };
  std::set<SubBlockKey> expect;
  for (WorkerId k : active) expect.insert(block_of(k));
  if (expect != blocks) fail("idle class does not match its expected block set");

  std::set<WorkerId> seen;
  for (WorkerId start : active) {
    if (seen.count(start)) continue;
    std::vector<WorkerId> cyc;
    for (WorkerId k = start; !seen.count(k); k = grp.owner_of_demand(k)) {
      seen.insert(k);
      cyc.push_back(k);
    }
    const std::string tag = group_tag(gi, WorkerSet::of({u})) + " cyc=" + std::to_string(start);
    if (cyc.size() == 2) {
      push_message(plan, state, u, {block_of(cyc[0]), block_of(cyc[1])}, tag + " bare");
    } else {
      for (std::size_t i = 0; i + 1 < cyc.size(); ++i)
        push_message(plan, state, u, {block_of(cyc[i]), block_of(cyc[i + 1])},
                     tag + " i=" + std::to_string(i + 1));
    }
  }
}

/* empty class: the pair scheme over active workers; every block is consumed
   piece by piece, three pieces in total, tracked by per-block counters */
void encode_c_class_active(ShufflePlan& plan, const StorageState& state, const Group& grp,
                           std::size_t gi, const std::set<SubBlockKey>& blocks) {
  const int K = grp.K();
  const WorkerSet idle = idle_set(grp);
  std::vector<WorkerId> active;
  for (WorkerId k = 1; k <= K; ++k)
    if (!idle.contains(k)) active.push_back(k);
  if (active.size() < 3) fail("pair scheme needs at least three active workers");

  std::map<SubBlockKey, int> taken;
  for (const SubBlockKey& b : blocks) taken[b] = 0;
  auto take = [&](UnitId unit, WorkerSet owners) {
    auto it = taken.find(SubBlockKey(unit, owners));
    if (it == taken.end())
      fail("pair scheme touched a block outside its class: " + SubBlockKey(unit, owners).str());
    if (++it->second > 3)
      fail("pair scheme consumed a fourth piece of " + SubBlockKey(unit, owners).str());
    return SubBlockKey(unit, owners, it->second);
  };

  auto sigma = [&](WorkerId k) { return grp.owner_of_demand(k); };
  for (WorkerId a : active) {
    const WorkerId ua = sigma(a);
    const UnitId da = grp.unit_demanded_by(a);
    for (WorkerId b : active) {
      if (b == a || b == ua) continue;
      const std::string tag =
          "g=" + std::to_string(gi) + " pair=(" + std::to_string(a) + "," + std::to_string(b) + ")";
      const WorkerId ub = sigma(b);
      if (ub != a) {
        const UnitId db = grp.unit_demanded_by(b);
        SubBlockKey p1 = take(da, WorkerSet::of({ua, b}));
        SubBlockKey p2 = take(da, WorkerSet::of({ua, ub}));
        SubBlockKey p3 = take(db, WorkerSet::of({a, ub}));
        push_message(plan, state, ua, {p1, p2}, tag + " x=1");
        push_message(plan, state, ub, {p2, p3}, tag + " x=2");
      } else {
        const WorkerId c = ua, d = sigma(c);
        const UnitId dc = grp.unit_demanded_by(c);
        SubBlockKey p1 = take(da, WorkerSet::of({c, b}));
        SubBlockKey p2 = take(da, WorkerSet::of({c, d}));
        SubBlockKey p3 = take(dc, WorkerSet::of({a, d}));
        push_message(plan, state, c, {p1}, tag + " x=1");
        push_message(plan, state, d, {p2, p3}, tag + " x=2");
      }
    }
  }
  for (const auto& [b, n] : taken)
    if (n != 3) fail("piece accounting ended at " + std::to_string(n) + " for " + b.str());
}

}  // namespace

ShufflePlan encode_scheme_c(const StorageState& state, const Assignment& a_next) {
  check_scheme_layout(SchemeKind::C, state);
  check_next_assignment(state, a_next);
  ShufflePlan plan = new_plan(SchemeKind::C, state);
  const StorageLayout& lay = state.layout;

  const std::vector<Group> groups = decompose_groups(lay.assign, a_next);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const Group& grp = groups[gi];
    const WorkerSet idle = idle_set(grp);
    for (const auto& [cls, blocks] : split_sets(grp, 2)) {
      if (blocks.empty()) continue;
      if (cls.empty()) {
        encode_c_class_active(plan, state, grp, gi + 1, blocks);
      } else if (cls.size() == 1 && idle.contains(cls.elements().front())) {
        encode_c_class_idle(plan, state, grp, gi + 1, cls.elements().front(), blocks);
      } else {
        fail("unexpected nonempty split class " + cls.str() + " at m=2");
      }
    }
  }
  return plan;
}

ShufflePlan encode_for(SchemeKind scheme, const StorageState& state, const Assignment& a_next) {
  switch (scheme) {
    case SchemeKind::Uncoded: return encode_uncoded(state, a_next);
    case SchemeKind::A: return encode_scheme_a(state, a_next);
    case SchemeKind::B: return encode_scheme_b(state, a_next);
    case SchemeKind::C: return encode_scheme_c(state, a_next);
    case SchemeKind::Combined: break;
  }
  fail("a mixture is encoded part by part, not as one scheme");
}

// ---------------------------------------------------------------------------
// Decoding: GF(2) elimination over the unknown components of the broadcast
// messages, seen from one worker's storage.

namespace {

struct GfRow {
  std::vector<std::uint64_t> mask;
  BitBlock res;
};

bool row_bit(const GfRow& r, int v) { return r.mask[v / 64] >> (v % 64) & 1; }

void row_xor(GfRow& r, const GfRow& o) {
  for (std::size_t w = 0; w < r.mask.size(); ++w) r.mask[w] ^= o.mask[w];
  if (r.res.size() != o.res.size()) fail("eliminating rows of different payload lengths");
  r.res = xor_zero_pad(r.res, o.res);
}

int row_lowest(const GfRow& r) {
  for (std::size_t w = 0; w < r.mask.size(); ++w)
    if (r.mask[w]) return (int)(w * 64 + __builtin_ctzll(r.mask[w]));
  return -1;
}

int row_popcount(const GfRow& r) {
  int n = 0;
  for (std::uint64_t w : r.mask) n += __builtin_popcountll(w);
  return n;
}

}  // namespace

std::map<SubBlockKey, BitBlock> decode_worker(const StorageState& state, WorkerId k,
                                              const ShufflePlan& plan,
                                              const Assignment& a_next) {
  const StorageLayout& lay = state.layout;
  if (plan.K != lay.K || plan.q != lay.q || plan.B != state.B)
    fail("plan does not match the storage state");
  check_next_assignment(state, a_next);
  if (k < 1 || k > lay.K) fail("no such worker: " + std::to_string(k));
  const auto& view = state.contents.at(k);

  std::vector<SubBlockKey> needed;
  for (UnitId i : a_next.units_of(k))
    for (const SubBlockKey& key : unit_subblocks(lay, i))
      if (!view.count(key)) needed.push_back(key);
  if (needed.empty()) return {};

  // intern every component this worker cannot read from storage
  std::map<SubBlockKey, int> var_id;
  std::vector<SubBlockKey> vars;
  std::vector<long long> var_len;
  std::vector<std::pair<std::vector<int>, BitBlock>> pending;
  for (const BroadcastMessage& msg : plan.messages) {
    BitBlock residual = msg.payload;
    std::vector<int> unknowns;
    for (const SubBlockKey& comp : msg.components) {
      PieceSpan sp = piece_span(plan.scheme, lay, state.B, comp);
      if (sp.length != msg.payload.size())
        fail("component span does not match payload length in: " + msg.tag);
      auto it = view.find(comp.whole());
      if (it != view.end()) {
        residual = xor_zero_pad(residual, it->second.slice(sp.offset, sp.length));
        continue;
      }
      auto [vit, fresh] = var_id.emplace(comp, (int)vars.size());
      if (fresh) {
        vars.push_back(comp);
        var_len.push_back(sp.length);
      }
      unknowns.push_back(vit->second);
    }
    if (unknowns.empty()) continue;  // nothing new for this worker
    pending.emplace_back(std::move(unknowns), std::move(residual));
  }

  const std::size_t nwords = (vars.size() + 63) / 64;
  std::vector<GfRow> basis;
  std::vector<int> pivots;
  for (auto& [unknowns, residual] : pending) {
    GfRow row{std::vector<std::uint64_t>(nwords, 0), std::move(residual)};
    for (int v : unknowns) row.mask[v / 64] ^= 1ull << (v % 64);
    for (std::size_t bi = 0; bi < basis.size(); ++bi)
      if (row_bit(row, pivots[bi])) row_xor(row, basis[bi]);
    int piv = row_lowest(row);
    if (piv < 0) continue;  // redundant equation
    for (std::size_t bi = 0; bi < basis.size(); ++bi)
      if (row_bit(basis[bi], piv)) row_xor(basis[bi], row);
    basis.push_back(std::move(row));
    pivots.push_back(piv);
  }

  std::map<SubBlockKey, BitBlock> solved;
  for (std::size_t bi = 0; bi < basis.size(); ++bi) {
    if (row_popcount(basis[bi]) != 1) continue;
    const int v = pivots[bi];
    if (basis[bi].res.size() != var_len[v]) fail("solved variable has the wrong length");
    solved.emplace(vars[v], std::move(basis[bi].res));
  }

  std::map<SubBlockKey, BitBlock> out;
  for (const SubBlockKey& nk : needed) {
    if (auto it = solved.find(nk); it != solved.end()) {
      out.emplace(nk, it->second);
      continue;
    }
    std::vector<int> piece_ids;
    if (plan.scheme == SchemeKind::C) piece_ids = {1, 2, 3};
    else piece_ids = nk.owners.elements();
    BitBlock acc;
    bool ok = true;
    for (int pid : piece_ids) {
      auto pit = solved.find(SubBlockKey(nk.unit, nk.owners, pid));
      if (pit == solved.end()) {
        ok = false;
        break;
      }
      acc.append(pit->second);
    }
    if (!ok || acc.size() != state.subblock_bits)
      fail("worker " + std::to_string(k) + " cannot decode " + nk.str());
    out.emplace(nk, std::move(acc));
  }
  return out;
}

void audit_plan(const StorageState& state, const ShufflePlan& plan) {
  const StorageLayout& lay = state.layout;
  if (plan.K != lay.K || plan.q != lay.q || plan.B != state.B)
    fail("plan does not match the storage state");
  for (const BroadcastMessage& msg : plan.messages) {
    if (msg.sender < 1 || msg.sender > lay.K) fail("message from unknown worker: " + msg.tag);
    if (msg.components.empty()) fail("message without components: " + msg.tag);
    std::set<SubBlockKey> seen;
    BitBlock expect;
    for (std::size_t i = 0; i < msg.components.size(); ++i) {
      const SubBlockKey& comp = msg.components[i];
      if (!seen.insert(comp).second) fail("duplicate component " + comp.str() + " in: " + msg.tag);
      if (!lay.holds(msg.sender, comp.whole()))
        fail("sender " + std::to_string(msg.sender) + " does not store " + comp.str() +
             " for: " + msg.tag);
      BitBlock part = span_bits(state, plan.scheme, msg.sender, comp);
      if (i == 0) {
        expect = std::move(part);
      } else {
        if (part.size() != expect.size())
          fail("components of unequal length in one message: " + msg.tag);
        expect = xor_zero_pad(expect, part);
      }
    }
    if (!(expect == msg.payload))
      fail("payload is not the XOR of its components (encoding constraint): " + msg.tag);
  }
}

// ---------------------------------------------------------------------------
// Worst-case loads and the memory-sharing envelope.

Rational scheme_load_formula(SchemeKind scheme, int K, int param) {
  if (K < 2) throw std::invalid_argument("load formulas need K >= 2");
  switch (scheme) {
    case SchemeKind::Uncoded:
      return Rational(K);
    case SchemeKind::A:
      if (param < 1 || param > K - 1) throw std::invalid_argument("scheme A needs 1 <= g <= K-1");
      return Rational(K - param, param);
    case SchemeKind::B:
      if (param != K - 2 && param != K - 1 && param != K)
        throw std::invalid_argument("scheme B supports m in {K-2, K-1, K} only");
      if (param < 1) throw std::invalid_argument("scheme B needs m >= 1");
      return Rational((long long)(K - param) * K, (long long)param * (K - 1));
    case SchemeKind::C:
      if (K < 3) throw std::invalid_argument("scheme C needs K >= 3");
      return Rational(2ll * K * (K - 2), 3ll * (K - 1));
    case SchemeKind::Combined:
      break;
  }
  throw std::invalid_argument("a mixture has no single-scheme load formula");
}

namespace {

struct Candidate {
  Rational M;
  Rational load;
  SchemeKind scheme;
  int param;
  int pri;
};

int scheme_priority(SchemeKind s) {
  switch (s) {
    case SchemeKind::Uncoded: return 0;
    case SchemeKind::B: return 1;
    case SchemeKind::C: return 2;
    default: return 3;
  }
}

/* true when b lies strictly above the segment from a to c */
bool strictly_above(const Candidate& a, const Candidate& b, const Candidate& c) {
  Rational cross = (c.M - a.M) * (b.load - a.load) - (b.M - a.M) * (c.load - a.load);
  return cross > Rational(0);
}

std::vector<Candidate> corner_candidates(int K) {
  std::vector<Candidate> cand;
  cand.push_back({Rational(1), Rational(K), SchemeKind::Uncoded, 1,
                  scheme_priority(SchemeKind::Uncoded)});
  cand.push_back({Rational(2), scheme_load_formula(SchemeKind::C, K, 2), SchemeKind::C, 2,
                  scheme_priority(SchemeKind::C)});
  for (int g = 1; g <= K - 1; ++g)
    cand.push_back({Rational((long long)K + (long long)g * (K - 1), K),
                    scheme_load_formula(SchemeKind::A, K, g), SchemeKind::A, g,
                    scheme_priority(SchemeKind::A)});
  for (int m : {K - 2, K - 1, K})
    if (m >= 1)
      cand.push_back({Rational(m), scheme_load_formula(SchemeKind::B, K, m), SchemeKind::B, m,
                      scheme_priority(SchemeKind::B)});

  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    if (a.M != b.M) return a.M < b.M;
    if (a.load != b.load) return a.load < b.load;
    return a.pri < b.pri;
  });
  std::vector<Candidate> uniq;
  for (const Candidate& c : cand)
    if (uniq.empty() || !(uniq.back().M == c.M)) uniq.push_back(c);
  return uniq;
}

}  // namespace

std::vector<MixComponent> combined_corners(int K) {
  if (K < 3) throw std::invalid_argument("memory sharing needs K >= 3");
  std::vector<Candidate> hull;
  for (const Candidate& c : corner_candidates(K)) {
    while (hull.size() >= 2 && strictly_above(hull[hull.size() - 2], hull.back(), c))
      hull.pop_back();
    hull.push_back(c);
  }
  std::vector<MixComponent> out;
  for (const Candidate& c : hull)
    out.push_back({c.scheme, c.param, Rational(1), c.M, c.load});
  return out;
}

Rational combined_load_at(int K, const Rational& M_over_q) {
  Rational out(0);
  for (const MixComponent& part : combined_plan(K, M_over_q))
    out = out + part.load_over_q * part.weight;
  return out;
}

std::vector<MixComponent> combined_plan(int K, const Rational& M_over_q) {
  const std::vector<MixComponent> corners = combined_corners(K);
  if (M_over_q < corners.front().m_over_q || corners.back().m_over_q < M_over_q)
    throw std::invalid_argument("storage point out of range: need 1 <= M/q <= K");
  for (const MixComponent& c : corners)
    if (c.m_over_q == M_over_q) return {c};
  for (std::size_t i = 0; i + 1 < corners.size(); ++i) {
    const MixComponent& lo = corners[i];
    const MixComponent& hi = corners[i + 1];
    if (lo.m_over_q < M_over_q && M_over_q < hi.m_over_q) {
      const Rational span = hi.m_over_q - lo.m_over_q;
      MixComponent a = lo, b = hi;
      a.weight = (hi.m_over_q - M_over_q) / span;
      b.weight = (M_over_q - lo.m_over_q) / span;
      return {a, b};
    }
  }
  throw std::logic_error("no envelope segment found");
}

long long mixture_min_block(int K, const Rational& M_over_q) {
  long long out = 1;
  for (const MixComponent& part : combined_plan(K, M_over_q)) {
    const long long minb = minimal_block_size(part.scheme, K, part.param);
    const long long need = part.weight.den * (minb / std::gcd(part.weight.num, minb));
    out = std::lcm(out, need);
  }
  return out;
}

}  // namespace dshuffle
