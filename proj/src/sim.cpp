#include "dshuffle/sim.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "dshuffle/bounds.hpp"
#include "dshuffle/groups.hpp"
#include "dshuffle/layout.hpp"

namespace dshuffle {

namespace {

[[noreturn]] void fail_cfg(const std::string& msg) { throw std::invalid_argument(msg); }

// verification failure inside an epoch; run_session turns it into report.failure
[[noreturn]] void fail_check(const std::string& msg) { throw std::runtime_error(msg); }

int layout_param_for(SchemeKind scheme, int param) {
  switch (scheme) {
    case SchemeKind::Uncoded: return 1;
    case SchemeKind::A: return param;
    case SchemeKind::B: return param;
    case SchemeKind::C: return 2;
    default: fail_cfg("combined sessions are built from their parts");
  }
}

StorageLayout layout_for(SchemeKind scheme, int K, int q, int param, const Assignment& a) {
  int p = layout_param_for(scheme, param);
  if (scheme == SchemeKind::A) return build_layout_a(K, q, p, a);
  return build_layout_bc(K, q, p, a);
}

void fisher_yates(std::vector<int>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[bounded_rand(rng, i)]);
}

struct Part {
  SchemeKind scheme = SchemeKind::Uncoded;
  int param = 0;       // layout parameter (g or m)
  long long B = 0;     // bits of each unit handled by this part
  long long offset = 0;
  StorageState state;
};

std::string join_keys(const std::vector<SubBlockKey>& keys) {
  std::string s;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) s += '+';
    s += keys[i].str();
  }
  return s;
}

}  // namespace

std::string shuffle_mode_name(ShuffleMode m) {
  switch (m) {
    case ShuffleMode::Worst: return "worst";
    case ShuffleMode::Cyclic: return "cyclic";
    case ShuffleMode::Random: return "random";
    case ShuffleMode::Scripted: return "scripted";
  }
  return "?";
}

ShuffleMode shuffle_mode_from_name(const std::string& name) {
  if (name == "worst") return ShuffleMode::Worst;
  if (name == "cyclic") return ShuffleMode::Cyclic;
  if (name == "random") return ShuffleMode::Random;
  if (name == "scripted") return ShuffleMode::Scripted;
  fail_cfg("unknown shuffle mode: " + name);
}

std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) fail_cfg("bounded_rand needs n > 0");
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / n * n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::vector<int> random_derangement(int K, std::mt19937_64& rng) {
  if (K < 2) fail_cfg("derangements need K >= 2");
  std::vector<int> d(K);
  bool ok = false;
  while (!ok) {
    std::iota(d.begin(), d.end(), 1);
    fisher_yates(d, rng);
    ok = true;
    for (int k = 1; k <= K; ++k)
      if (d[k - 1] == k) {
        ok = false;
        break;
      }
  }
  return d;
}

Assignment gen_shuffle(ShuffleMode mode, const Assignment& a_prev, std::mt19937_64& rng,
                       const std::vector<Assignment>& script, int epoch) {
  const int K = a_prev.K, q = a_prev.q;
  switch (mode) {
    case ShuffleMode::Worst: {
      std::vector<int> d = random_derangement(K, rng);
      std::vector<std::vector<UnitId>> b(K);
      for (int k = 1; k <= K; ++k) b[k - 1] = a_prev.batches[d[k - 1]];
      return make_assignment(K, q, b, epoch);
    }
    case ShuffleMode::Cyclic: {
      std::vector<std::vector<UnitId>> b(K);
      for (int k = 1; k <= K; ++k) b[k - 1] = a_prev.batches[k % K + 1];
      return make_assignment(K, q, b, epoch);
    }
    case ShuffleMode::Random: {
      std::vector<int> perm(K * q);
      std::iota(perm.begin(), perm.end(), 1);
      fisher_yates(perm, rng);
      std::vector<std::vector<UnitId>> b(K);
      for (int k = 1; k <= K; ++k)
        b[k - 1].assign(perm.begin() + (k - 1) * q, perm.begin() + k * q);
      return make_assignment(K, q, b, epoch);
    }
    case ShuffleMode::Scripted: {
      if (epoch < 1 || epoch > (int)script.size())
        fail_cfg("script has no entry for epoch " + std::to_string(epoch));
      Assignment a = script[epoch - 1];
      a.epoch = epoch;
      if (auto err = validate_assignment(a, K, q))
        fail_cfg("script entry " + std::to_string(epoch) + ": " + *err);
      return a;
    }
  }
  fail_cfg("unknown shuffle mode");
}

bool is_full_derangement(const Assignment& prev, const Assignment& next) {
  for (int k = 1; k <= prev.K; ++k)
    for (UnitId u : next.batches[k])
      if (std::binary_search(prev.batches[k].begin(), prev.batches[k].end(), u)) return false;
  return true;
}

std::optional<std::vector<int>> batch_derangement_of(const Assignment& prev,
                                                     const Assignment& next) {
  const int K = prev.K;
  std::map<std::vector<UnitId>, int> prev_owner;
  for (int k = 1; k <= K; ++k) prev_owner[prev.batches[k]] = k;
  std::vector<int> d(K);
  for (int k = 1; k <= K; ++k) {
    auto it = prev_owner.find(next.batches[k]);
    if (it == prev_owner.end() || it->second == k) return std::nullopt;
    d[k - 1] = it->second;
  }
  return d;
}

long long default_block_bits(const SimConfig& cfg) {
  if (cfg.scheme == SchemeKind::Combined) return mixture_min_block(cfg.K, cfg.m_over_q);
  return minimal_block_size(cfg.scheme, cfg.K, cfg.param);
}

SessionReport run_session(const SimConfig& cfg) {
  const int K = cfg.K, q = cfg.q, T = cfg.T;
  if (K < 2) fail_cfg("K must be at least 2");
  if (q < 1) fail_cfg("q must be at least 1");
  if (T < 1) fail_cfg("need at least one epoch");

  // scheme/parameter sanity before any bit is allocated
  switch (cfg.scheme) {
    case SchemeKind::Uncoded:
      break;
    case SchemeKind::A:
      if (cfg.param < 1 || cfg.param > K - 1) fail_cfg("scheme A needs g in [1..K-1]");
      break;
    case SchemeKind::B:
      if (cfg.param != K - 2 && cfg.param != K - 1 && cfg.param != K)
        fail_cfg("scheme B needs m in {K-2, K-1, K}");
      if (cfg.param < 1) fail_cfg("scheme B needs m >= 1");
      break;
    case SchemeKind::C:
      if (K < 3) fail_cfg("scheme C needs K >= 3");
      break;
    case SchemeKind::Combined:
      if (cfg.m_over_q < Rational(1) || cfg.m_over_q > Rational(K))
        fail_cfg("combined sessions need 1 <= M/q <= K");
      break;
  }
  if (cfg.mode == ShuffleMode::Scripted && (int)cfg.script.size() != T)
    fail_cfg("scripted mode needs exactly one assignment per epoch");

  SessionReport report;
  report.cfg = cfg;

  long long B = cfg.B > 0 ? cfg.B : default_block_bits(cfg);
  long long min_b = default_block_bits(cfg);
  if (B % min_b != 0)
    fail_cfg("block size " + std::to_string(B) + " is not a multiple of the minimal size " +
             std::to_string(min_b) + " for this configuration");
  report.B = B;

  Assignment a_cur = cfg.init.value_or(identity_assignment(K, q, 0));
  if (auto err = validate_assignment(a_cur, K, q)) fail_cfg("bad initial assignment: " + *err);
  a_cur.epoch = 0;

  // one PRNG stream: unit contents first, then the per-epoch draws
  std::mt19937_64 rng(cfg.seed);
  const int N = K * q;
  std::map<UnitId, BitBlock> units;
  for (UnitId i = 1; i <= N; ++i) units[i] = BitBlock::random(B, rng);

  // a session is one part per pure scheme; mixtures split every unit
  std::vector<Part> parts;
  if (cfg.scheme == SchemeKind::Combined) {
    long long off = 0;
    for (const MixComponent& comp : combined_plan(K, cfg.m_over_q)) {
      Part p;
      p.scheme = comp.scheme;
      p.param = comp.param;
      Rational bits = comp.weight * Rational(B);
      if (bits.den != 1 || bits.num <= 0)
        fail_cfg("mixture part " + scheme_name(comp.scheme) + " gets a fractional block split");
      p.B = bits.num;
      p.offset = off;
      off += p.B;
      parts.push_back(std::move(p));
    }
    if (off != B) fail_cfg("mixture split does not cover the block");
  } else {
    Part p;
    p.scheme = cfg.scheme;
    p.param = layout_param_for(cfg.scheme, cfg.param);
    p.B = B;
    p.offset = 0;
    parts.push_back(std::move(p));
  }

  auto part_budget = [&](const Part& p) {
    return p.state.layout.kind.M_over_q(K) * Rational(q) * Rational(p.B);
  };

  try {
    for (Part& p : parts) {
      std::map<UnitId, BitBlock> part_units;
      for (UnitId i = 1; i <= N; ++i) part_units[i] = units.at(i).slice(p.offset, p.B);
      p.state = init_storage(layout_for(p.scheme, K, q, p.param, a_cur), part_units);
      for (WorkerId k = 1; k <= K; ++k)
        if (Rational(p.state.stored_bits(k)) > part_budget(p))
          fail_check("worker " + std::to_string(k) + ": storage " +
                     std::to_string(p.state.stored_bits(k)) + " bits exceeds the budget " +
                     (part_budget(p)).str());
    }
  } catch (const std::exception& e) {
    report.failure = std::string("epoch 0: ") + e.what();
    return report;
  }

  const Rational M_eff = cfg.scheme == SchemeKind::Combined
                             ? cfg.m_over_q
                             : parts[0].state.layout.kind.M_over_q(K);

  report.worst_load_over_q = Rational(0);
  for (int t = 1; t <= T; ++t) {
    Assignment a_next = gen_shuffle(cfg.mode, a_cur, rng, cfg.script, t);
    try {
      const bool full_der = is_full_derangement(a_cur, a_next);
      const auto d_opt = batch_derangement_of(a_cur, a_next);

      // exact storer-set sizes before the update, for the lower bound
      std::map<SubBlockKey, long long> sizes;
      if (d_opt)
        for (const Part& p : parts)
          for (const auto& [key, bits] : realized_sizes(p.state)) sizes[key] += bits;

      long long total_bits = 0;
      for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        Part& p = parts[pi];
        ShufflePlan plan;
        if (p.scheme == SchemeKind::B && p.param == K) {
          // full storage, nothing to broadcast
          plan.scheme = p.scheme;
          plan.K = K;
          plan.q = q;
          plan.B = p.B;
        } else {
          plan = encode_for(p.scheme, p.state, a_next);
        }
        audit_plan(p.state, plan);

        std::string prefix = parts.size() > 1 ? "p" + std::to_string(pi + 1) + " " : "";
        for (const BroadcastMessage& msg : plan.messages)
          report.trace.push_back("t=" + std::to_string(t) + " from=" + std::to_string(msg.sender) +
                                 " tag=" + prefix + msg.tag + " comps=" + join_keys(msg.components) +
                                 " payload=" + msg.payload.hex());

        LoadReport rep = make_load_report(plan);
        Rational cap = Rational(q) * scheme_load_formula(p.scheme, K, p.param);
        if (rep.normalized > cap)
          fail_check("scheme " + scheme_name(p.scheme) + " load " + rep.normalized.str() +
                     " exceeds the worst-case formula " + cap.str());
        if (full_der && rep.normalized != cap)
          fail_check("full-derangement load " + rep.normalized.str() + " of scheme " +
                     scheme_name(p.scheme) + " misses the worst-case formula " + cap.str());

        RecoveredBlocks recovered;
        for (WorkerId k = 1; k <= K; ++k) recovered[k] = decode_worker(p.state, k, plan, a_next);

        p.state = p.scheme == SchemeKind::A ? update_storage_a(p.state, a_next, recovered)
                                            : update_storage_bc(p.state, a_next, recovered);

        StorageLayout fresh = layout_for(p.scheme, K, q, p.param, a_next);
        if (fresh.holdings != p.state.layout.holdings)
          fail_check("layout after update differs from a fresh canonical build");
        for (WorkerId k = 1; k <= K; ++k) {
          const auto& held = p.state.layout.holdings.at(k);
          const auto& have = p.state.contents.at(k);
          if (held.size() != have.size())
            fail_check("worker " + std::to_string(k) + ": stored keys diverge from the layout");
          for (const auto& [key, bits] : have)
            if (!held.count(key))
              fail_check("worker " + std::to_string(k) + ": stores " + key.str() +
                         " outside the layout");
        }

        for (WorkerId k = 1; k <= K; ++k) {
          for (UnitId i : a_next.units_of(k))
            if (!(p.state.reassemble_unit(k, i) == units.at(i).slice(p.offset, p.B)))
              fail_check("worker " + std::to_string(k) + ": decoded unit " + std::to_string(i) +
                         " differs from ground truth");
          if (Rational(p.state.stored_bits(k)) > part_budget(p))
            fail_check("worker " + std::to_string(k) + ": storage " +
                       std::to_string(p.state.stored_bits(k)) + " bits exceeds the budget " +
                       part_budget(p).str());
        }

        total_bits += rep.total_bits;
      }

      EpochStats stats;
      stats.epoch = t;
      stats.assign = a_next;
      stats.full_derangement = full_der;
      stats.total_bits = total_bits;
      stats.load = Rational(total_bits) / Rational(B);
      stats.load_over_q = stats.load / Rational(q);

      if (cfg.scheme == SchemeKind::Combined) {
        Rational cap = combined_load_at(K, cfg.m_over_q);
        if (stats.load_over_q > cap)
          fail_check("combined load " + stats.load_over_q.str() +
                     " exceeds the mixture formula " + cap.str());
        if (full_der && stats.load_over_q != cap)
          fail_check("full-derangement combined load " + stats.load_over_q.str() +
                     " misses the mixture formula " + cap.str());
      }

      if (d_opt) {
        Rational bound = per_shuffle_lower_bound(sizes, *d_opt, a_cur);
        stats.lower_bound = bound;
        if (stats.load < bound)
          fail_check("load " + stats.load.str() + " is below the per-shuffle lower bound " +
                     bound.str());
      }
      if (full_der) {
        Rational conv = converse_envelope_at(K, M_eff);
        if (stats.load_over_q < conv)
          fail_check("load " + stats.load_over_q.str() + " is below the converse bound " +
                     conv.str());
      }

      report.worst_load_over_q = std::max(report.worst_load_over_q, stats.load_over_q);
      report.epochs.push_back(std::move(stats));
      a_cur = a_next;
    } catch (const std::exception& e) {
      report.failure = "epoch " + std::to_string(t) + ": " + e.what();
      return report;
    }
  }

  report.ok = true;
  return report;
}

}  // namespace dshuffle
