#include "dshuffle/layout.hpp"

#include <algorithm>

namespace dshuffle {

namespace {

// All |W|=s subsets of [1..K] in canonical (sorted-tuple) order.
std::vector<WorkerSet> subsets_of_size(int K, int s) {
  std::vector<WorkerSet> out;
  if (s < 0 || s > K) return out;
  std::vector<int> idx(s);
  for (int i = 0; i < s; ++i) idx[i] = i + 1;
  while (true) {
    WorkerSet w;
    for (int v : idx) w.add(v);
    out.push_back(w);
    int i = s - 1;
    while (i >= 0 && idx[i] == K - (s - 1 - i)) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

void check_ka(int K, int q, const Assignment& a, const char* fn) {
  if (auto err = validate_assignment(a, K, q))
    throw std::invalid_argument(std::string(fn) + ": invalid assignment: " + *err);
}

}  // namespace

Rational LayoutKind::M_over_q(int K) const {
  if (family == Family::A) return Rational(1) + Rational((long long)param * (K - 1), K);
  return Rational(param);
}

std::string LayoutKind::str() const {
  return (family == Family::A ? "A(g=" : "BC(m=") + std::to_string(param) + ")";
}

std::string SubBlockKey::str() const {
  std::string s = "F" + std::to_string(unit) + owners.str();
  if (piece) s += "#" + std::to_string(piece);
  return s;
}

long long StorageLayout::subblocks_per_unit() const {
  if (kind.family == LayoutKind::Family::A) return binom(K, kind.param);
  return binom(K - 1, kind.param - 1);
}

bool StorageLayout::holds(WorkerId k, const SubBlockKey& key) const {
  auto it = holdings.find(k);
  return it != holdings.end() && it->second.count(key.whole()) > 0;
}

StorageLayout build_layout_a(int K, int q, int g, const Assignment& a) {
  if (g < 1 || g > K - 1) throw std::invalid_argument("build_layout_a: g must be in [1..K-1]");
  check_ka(K, q, a, "build_layout_a");
  StorageLayout st;
  st.kind = {LayoutKind::Family::A, g};
  st.K = K;
  st.q = q;
  st.epoch = a.epoch;
  st.assign = a;
  auto sets = subsets_of_size(K, g);
  for (int k = 1; k <= K; ++k) {
    auto& h = st.holdings[k];
    for (UnitId i = 1; i <= K * q; ++i) {
      bool assigned = a.assigned_to(i, k);
      for (const auto& w : sets)
        if (assigned || w.contains(k)) h.insert(SubBlockKey(i, w));
    }
  }
  return st;
}

StorageLayout build_layout_bc(int K, int q, int m, const Assignment& a) {
  if (m < 1 || m > K) throw std::invalid_argument("build_layout_bc: m must be in [1..K]");
  check_ka(K, q, a, "build_layout_bc");
  StorageLayout st;
  st.kind = {LayoutKind::Family::BC, m};
  st.K = K;
  st.q = q;
  st.epoch = a.epoch;
  st.assign = a;
  auto sets = subsets_of_size(K, m);
  for (int k = 1; k <= K; ++k) {
    auto& h = st.holdings[k];
    for (UnitId i = 1; i <= K * q; ++i) {
      WorkerId owner = a.worker_of(i);
      bool assigned = owner == k;
      for (const auto& w : sets) {
        if (!w.contains(owner)) continue;  // partition keeps the assignee in every owner set
        if (assigned || w.contains(k)) h.insert(SubBlockKey(i, w));
      }
    }
  }
  return st;
}

std::vector<SubBlockKey> unit_subblocks(const StorageLayout& layout, UnitId i) {
  std::vector<SubBlockKey> keys;
  int K = layout.K;
  if (layout.kind.family == LayoutKind::Family::A) {
    for (const auto& w : subsets_of_size(K, layout.kind.param)) keys.emplace_back(i, w);
  } else {
    WorkerId owner = layout.assign.worker_of(i);
    for (const auto& w : subsets_of_size(K, layout.kind.param))
      if (w.contains(owner)) keys.emplace_back(i, w);
  }
  return keys;  // subsets_of_size is already canonically sorted
}

const BitBlock& StorageState::bits_of(WorkerId k, const SubBlockKey& key) const {
  auto wit = contents.find(k);
  if (wit == contents.end()) throw std::invalid_argument("bits_of: unknown worker");
  auto it = wit->second.find(key.whole());
  if (it == wit->second.end())
    throw std::invalid_argument("bits_of: worker " + std::to_string(k) + " does not hold " + key.str());
  return it->second;
}

long long StorageState::stored_bits(WorkerId k) const {
  long long total = 0;
  auto wit = contents.find(k);
  if (wit == contents.end()) return 0;
  for (const auto& [key, bits] : wit->second) total += bits.size();
  return total;
}

BitBlock StorageState::reassemble_unit(WorkerId k, UnitId i) const {
  auto keys = unit_subblocks(layout, i);
  std::vector<const BitBlock*> slices(keys.size(), nullptr);
  for (const auto& key : keys) {
    int pos = slice_index.at(key);
    slices[pos] = &bits_of(k, key);
  }
  BitBlock unit;
  for (const BitBlock* s : slices) {
    if (!s) throw std::logic_error("reassemble_unit: missing slice");
    unit.append(*s);
  }
  return unit;
}

StorageState init_storage(const StorageLayout& layout, const std::map<UnitId, BitBlock>& units) {
  StorageState st;
  st.layout = layout;
  long long per_unit = layout.subblocks_per_unit();
  if ((int)units.size() != layout.K * layout.q)
    throw std::invalid_argument("init_storage: need exactly K*q units");
  long long B = -1;
  for (const auto& [i, bits] : units) {
    if (B < 0) B = bits.size();
    if (bits.size() != B) throw std::invalid_argument("init_storage: units differ in length");
  }
  if (B <= 0) throw std::invalid_argument("init_storage: B must be positive");
  if (B % per_unit != 0)
    throw std::invalid_argument("init_storage: B=" + std::to_string(B) +
                                " is not divisible by the " + std::to_string(per_unit) +
                                " sub-blocks per unit");
  st.B = B;
  st.subblock_bits = B / per_unit;

  // Canonical slicing: slice r of unit i belongs to the r-th key in
  // lexicographic order.
  for (UnitId i = 1; i <= layout.K * layout.q; ++i) {
    auto keys = unit_subblocks(layout, i);
    for (size_t r = 0; r < keys.size(); ++r) st.slice_index[keys[r]] = (int)r;
  }
  for (const auto& [k, held] : layout.holdings) {
    auto& bag = st.contents[k];
    for (const auto& key : held) {
      int r = st.slice_index.at(key);
      bag[key] = units.at(key.unit).slice((long long)r * st.subblock_bits, st.subblock_bits);
    }
  }
  return st;
}

SubBlockKey relabel_bc_key(const SubBlockKey& key, WorkerId o, WorkerId o_next) {
  if (o == o_next || key.owners.contains(o_next)) return key;
  SubBlockKey k2 = key;
  k2.owners = key.owners.without(o).with(o_next);
  return k2;
}

namespace {

const BitBlock& bits_or_recovered(const StorageState& state, const RecoveredBlocks& recovered,
                                  WorkerId k, const SubBlockKey& key, const char* fn) {
  auto wit = state.contents.find(k);
  if (wit != state.contents.end()) {
    auto it = wit->second.find(key);
    if (it != wit->second.end()) return it->second;
  }
  auto rit = recovered.find(k);
  if (rit != recovered.end()) {
    auto it = rit->second.find(key);
    if (it != rit->second.end()) return it->second;
  }
  throw std::invalid_argument(std::string(fn) + ": worker " + std::to_string(k) +
                              " neither stores nor recovered " + key.str());
}

}  // namespace

StorageState update_storage_a(const StorageState& state, const Assignment& a_next,
                              const RecoveredBlocks& recovered) {
  const StorageLayout& old = state.layout;
  if (old.kind.family != LayoutKind::Family::A)
    throw std::invalid_argument("update_storage_a: layout is not family A");
  Assignment a2 = a_next;
  a2.epoch = old.epoch + 1;
  StorageState st;
  st.layout = build_layout_a(old.K, old.q, old.kind.param, a2);
  st.B = state.B;
  st.subblock_bits = state.subblock_bits;
  st.slice_index = state.slice_index;  // family A keys never relabel
  for (const auto& [k, held] : st.layout.holdings) {
    auto& bag = st.contents[k];
    for (const auto& key : held)
      bag[key] = bits_or_recovered(state, recovered, k, key, "update_storage_a");
  }
  return st;
}

StorageState update_storage_bc(const StorageState& state, const Assignment& a_next,
                               const RecoveredBlocks& recovered) {
  const StorageLayout& old = state.layout;
  if (old.kind.family != LayoutKind::Family::BC)
    throw std::invalid_argument("update_storage_bc: layout is not family BC");
  if (auto err = validate_assignment(a_next, old.K, old.q))
    throw std::invalid_argument("update_storage_bc: invalid assignment: " + *err);
  Assignment a2 = a_next;
  a2.epoch = old.epoch + 1;
  StorageState st;
  st.layout = build_layout_bc(old.K, old.q, old.kind.param, a2);
  st.B = state.B;
  st.subblock_bits = state.subblock_bits;
  for (UnitId i = 1; i <= old.K * old.q; ++i) {
    WorkerId o = old.assign.worker_of(i);
    WorkerId o2 = a2.worker_of(i);
    for (const auto& key : unit_subblocks(old, i))
      st.slice_index[relabel_bc_key(key, o, o2)] = state.slice_index.at(key);
  }
  for (const auto& [k, held] : st.layout.holdings) {
    auto& bag = st.contents[k];
    for (const auto& key : held) {
      // Pull the bits from the old key carrying the same slice.
      WorkerId o2 = a2.worker_of(key.unit);
      WorkerId o = old.assign.worker_of(key.unit);
      SubBlockKey src = key;
      if (o != o2) {
        if (key.owners.contains(o)) src = key;  // forward map kept it fixed
        else src = SubBlockKey(key.unit, key.owners.without(o2).with(o));
      }
      bag[key] = bits_or_recovered(state, recovered, k, src, "update_storage_bc");
    }
  }
  return st;
}

std::vector<std::string> state_dump(const StorageState& state) {
  std::vector<std::string> lines;
  for (const auto& [k, bag] : state.contents)
    for (const auto& [key, bits] : bag)
      lines.push_back("worker=" + std::to_string(k) + " key=" + key.str() + " bits=" + bits.hex());
  return lines;
}

}  // namespace dshuffle
