#include "dshuffle/golden.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dshuffle/bounds.hpp"
#include "dshuffle/core.hpp"
#include "dshuffle/layout.hpp"
#include "dshuffle/schemes.hpp"
#include "dshuffle/sim.hpp"

namespace dshuffle {

namespace {

GoldenCheck check(const std::string& name, bool pass, const std::string& detail) {
  return {name, pass, pass ? "" : detail};
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += v[i];
  }
  return s;
}

// K=3 workers, one unit each (worker 1 holds unit 3, 2 holds 1, 3 holds 2),
// g=2 layout: every worker keeps the sub-blocks of its own unit plus the
// sub-blocks of other units labeled with a set containing it.
GoldenCheck golden_layout_a() {
  Assignment a = make_assignment1({3, 1, 2});
  StorageLayout lay = build_layout_a(3, 1, 2, a);
  std::map<WorkerId, std::set<std::string>> expect = {
      {1, {"F1{1,2}", "F1{1,3}", "F2{1,2}", "F2{1,3}", "F3{1,2}", "F3{1,3}", "F3{2,3}"}},
      {2, {"F1{1,2}", "F1{1,3}", "F1{2,3}", "F2{1,2}", "F2{2,3}", "F3{1,2}", "F3{2,3}"}},
      {3, {"F1{1,3}", "F1{2,3}", "F2{1,2}", "F2{1,3}", "F2{2,3}", "F3{1,3}", "F3{2,3}"}},
  };
  for (WorkerId k = 1; k <= 3; ++k) {
    std::set<std::string> got;
    for (const SubBlockKey& key : lay.holdings.at(k)) got.insert(key.str());
    if (got != expect.at(k))
      return check("layout-a-table", false,
                   "worker " + std::to_string(k) + " holds " + join({got.begin(), got.end()}, " "));
  }
  return check("layout-a-table", true, "");
}

// K=5, m=2, worker k holds unit k-1 (worker 1 holds unit 5): each unit is cut
// into the four owner pairs {assignee, x}.
GoldenCheck golden_layout_bc() {
  Assignment a = make_assignment1({5, 1, 2, 3, 4});
  StorageLayout lay = build_layout_bc(5, 1, 2, a);
  std::map<UnitId, std::set<std::string>> expect = {
      {1, {"{1,2}", "{2,3}", "{2,4}", "{2,5}"}}, {2, {"{1,3}", "{2,3}", "{3,4}", "{3,5}"}},
      {3, {"{1,4}", "{2,4}", "{3,4}", "{4,5}"}}, {4, {"{1,5}", "{2,5}", "{3,5}", "{4,5}"}},
      {5, {"{1,2}", "{1,3}", "{1,4}", "{1,5}"}},
  };
  for (UnitId i = 1; i <= 5; ++i) {
    std::set<std::string> got;
    for (const SubBlockKey& key : unit_subblocks(lay, i)) got.insert(key.owners.str());
    if (got != expect.at(i))
      return check("layout-bc-owner-sets", false,
                   "unit " + std::to_string(i) + " split into " +
                       join({got.begin(), got.end()}, " "));
  }
  return check("layout-bc-owner-sets", true, "");
}

// m=3 replay on K=5 from assignment (5,1,2,3,4): three alternative shuffles
// of the same epoch. A full shift costs 5/6; leaving worker 1 in place costs
// 13/18; leaving workers 1 and 2 in place costs 2/3. In the full shift each
// V_J is sent bare by the worker that now demands the unit the missing worker
// held.
std::vector<GoldenCheck> golden_scheme_b_replay() {
  std::vector<GoldenCheck> out;
  const std::vector<std::vector<UnitId>> shuffles = {
      {1, 2, 3, 4, 5}, {5, 2, 3, 4, 1}, {5, 1, 3, 4, 2}};
  const std::vector<Rational> want = {Rational(5, 6), Rational(13, 18), Rational(2, 3)};
  std::vector<std::string> first_trace;
  for (size_t s = 0; s < shuffles.size(); ++s) {
    SimConfig cfg;
    cfg.K = 5;
    cfg.q = 1;
    cfg.B = 18;
    cfg.T = 1;
    cfg.scheme = SchemeKind::B;
    cfg.param = 3;
    cfg.mode = ShuffleMode::Scripted;
    cfg.seed = 1;
    cfg.init = make_assignment1({5, 1, 2, 3, 4});
    cfg.script = {make_assignment1(shuffles[s], 1)};
    SessionReport rep = run_session(cfg);
    if (!rep.ok) {
      out.push_back(check("scheme-b-replay", false, rep.failure));
      return out;
    }
    if (rep.epochs[0].load != want[s]) {
      out.push_back(check("scheme-b-replay", false,
                          "shuffle " + assignment_str(cfg.script[0]) + " load " +
                              rep.epochs[0].load.str() + ", expected " + want[s].str()));
      return out;
    }
    if (s == 0) first_trace = rep.trace;
  }
  out.push_back(check("scheme-b-replay", true, ""));

  // sender map for the five bare V_J broadcasts of the full shift
  std::map<std::string, int> senders;
  for (const std::string& line : first_trace) {
    if (line.rfind("t=1 ", 0) != 0) continue;
    auto jpos = line.find("bare J=");
    if (jpos == std::string::npos) continue;
    std::string j = line.substr(jpos + 7, line.find(' ', jpos + 7) - (jpos + 7));
    int from = std::stoi(line.substr(line.find("from=") + 5));
    senders[j] = from;
  }
  std::map<std::string, int> expect = {{"{1,2,3,4}", 4},
                                       {"{1,2,3,5}", 3},
                                       {"{1,2,4,5}", 2},
                                       {"{1,3,4,5}", 1},
                                       {"{2,3,4,5}", 5}};
  std::string detail;
  for (const auto& [j, s] : expect)
    if (!senders.count(j) || senders[j] != s)
      detail += j + " sent by " + (senders.count(j) ? std::to_string(senders[j]) : "nobody") + " ";
  if (senders.size() != expect.size()) detail += "(" + std::to_string(senders.size()) + " bare messages)";
  out.push_back(check("scheme-b-senders", detail.empty(), detail));
  return out;
}

// K=5 pair-scheme broadcast table for the cyclic shift: per sender, the
// multiset of messages written as the sorted whole-key sets they combine.
GoldenCheck golden_scheme_c_table() {
  Assignment a0 = make_assignment1({5, 1, 2, 3, 4});
  Assignment a1 = make_assignment1({1, 2, 3, 4, 5}, 1);
  StorageLayout lay = build_layout_bc(5, 1, 2, a0);
  std::mt19937_64 rng(7);
  std::map<UnitId, BitBlock> units;
  for (UnitId i = 1; i <= 5; ++i) units[i] = BitBlock::random(12, rng);
  StorageState st = init_storage(lay, units);
  ShufflePlan plan = encode_scheme_c(st, a1);

  if (plan.messages.size() != 30)
    return check("scheme-c-table", false,
                 std::to_string(plan.messages.size()) + " messages, expected 30");
  LoadReport rep = make_load_report(plan);
  if (rep.normalized != Rational(5, 2))
    return check("scheme-c-table", false, "load " + rep.normalized.str() + ", expected 5/2");

  using Msg = std::vector<std::string>;
  std::map<WorkerId, std::multiset<Msg>> got;
  for (const BroadcastMessage& msg : plan.messages) {
    Msg keys;
    for (const SubBlockKey& comp : msg.components) keys.push_back(comp.whole().str());
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    got[msg.sender].insert(keys);
  }
  std::map<WorkerId, std::multiset<Msg>> expect = {
      {1,
       {{"F2{1,3}", "F5{1,2}"},
        {"F3{1,4}", "F5{1,3}"},
        {"F4{1,5}", "F5{1,4}"},
        {"F5{1,2}", "F5{1,3}"},
        {"F5{1,3}", "F5{1,4}"},
        {"F5{1,4}"}}},
      {2,
       {{"F1{2,3}", "F1{2,4}"},
        {"F1{2,4}", "F1{2,5}"},
        {"F1{2,5}"},
        {"F1{2,3}", "F3{2,4}"},
        {"F1{2,4}", "F4{2,5}"},
        {"F1{2,5}", "F5{1,2}"}}},
      {3,
       {{"F1{2,3}", "F2{1,3}"},
        {"F2{3,4}", "F2{3,5}"},
        {"F2{1,3}", "F2{3,5}"},
        {"F2{1,3}"},
        {"F2{3,4}", "F4{3,5}"},
        {"F2{3,5}", "F5{1,3}"}}},
      {4,
       {{"F1{2,4}", "F3{1,4}"},
        {"F2{3,4}", "F3{2,4}"},
        {"F3{1,4}", "F3{4,5}"},
        {"F3{1,4}", "F3{2,4}"},
        {"F3{2,4}"},
        {"F3{4,5}", "F5{1,4}"}}},
      {5,
       {{"F1{2,5}", "F4{1,5}"},
        {"F2{3,5}", "F4{2,5}"},
        {"F3{4,5}", "F4{3,5}"},
        {"F4{1,5}", "F4{2,5}"},
        {"F4{2,5}", "F4{3,5}"},
        {"F4{3,5}"}}},
  };
  for (WorkerId k = 1; k <= 5; ++k)
    if (got[k] != expect[k]) {
      std::string detail = "sender " + std::to_string(k) + " sent:";
      for (const Msg& m : got[k]) detail += " [" + join(m, "+") + "]";
      return check("scheme-c-table", false, detail);
    }
  return check("scheme-c-table", true, "");
}

// K=3 per-shuffle bound with non-uniform sizes: each unit keeps 2 bits
// exclusive to its assignee, 1 bit with each other worker, nothing in the
// full set. One cyclic batch rotation is lower-bounded by 15/8.
GoldenCheck golden_bound_example() {
  Assignment a_prev = make_assignment1({3, 1, 2});
  std::map<SubBlockKey, long long> sizes;
  for (UnitId i = 1; i <= 3; ++i) {
    WorkerId o = a_prev.worker_of(i);
    sizes[SubBlockKey(i, WorkerSet::of({o}))] = 2;
    for (WorkerId x = 1; x <= 3; ++x)
      if (x != o) sizes[SubBlockKey(i, WorkerSet::of({o, x}))] = 1;
    sizes[SubBlockKey(i, WorkerSet::full(3))] = 0;
  }
  Rational bound = per_shuffle_lower_bound(sizes, {2, 3, 1}, a_prev);
  return check("bound-example", bound == Rational(15, 8),
               "bound " + bound.str() + ", expected 15/8");
}

}  // namespace

std::vector<GoldenCheck> run_verify_golden() {
  std::vector<GoldenCheck> out;
  out.push_back(golden_layout_a());
  out.push_back(golden_layout_bc());
  for (GoldenCheck& c : golden_scheme_b_replay()) out.push_back(std::move(c));
  out.push_back(golden_scheme_c_table());
  out.push_back(golden_bound_example());
  return out;
}

bool all_pass(const std::vector<GoldenCheck>& checks) {
  for (const GoldenCheck& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace dshuffle
