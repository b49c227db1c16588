// Command-line front end: verified shuffle sessions, tradeoff curves with
// bound columns, bound tables, and the frozen-fixture self check.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dshuffle/bounds.hpp"
#include "dshuffle/core.hpp"
#include "dshuffle/golden.hpp"
#include "dshuffle/schemes.hpp"
#include "dshuffle/sim.hpp"

namespace fs = std::filesystem;
using namespace dshuffle;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<Assignment> load_script(const std::string& path, int K, int q) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open script file " + path);
  std::vector<Assignment> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(parse_assignment(t, K, q, (int)out.size() + 1));
  }
  return out;
}

std::string part_label(const MixComponent& comp) {
  switch (comp.scheme) {
    case SchemeKind::Uncoded: return "uncoded";
    case SchemeKind::A: return "a(g=" + std::to_string(comp.param) + ")";
    case SchemeKind::B: return "b(m=" + std::to_string(comp.param) + ")";
    case SchemeKind::C: return "c(m=2)";
    default: return "combined";
  }
}

std::string plan_label(const std::vector<MixComponent>& plan) {
  if (plan.size() == 1) return part_label(plan[0]);
  std::string s;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i) s += '+';
    s += part_label(plan[i]) + "*" + plan[i].weight.str();
  }
  return s;
}

struct SimulateOpts {
  int k = 0;
  int q = 1;
  long long bits = 0;
  int epochs = 1;
  std::string scheme = "uncoded";
  std::string layout_param;
  std::string shuffle = "worst";
  std::uint64_t seed = 0;
  std::string script;
  std::string init;
  std::string out = "out";
};

int run_simulate(const SimulateOpts& o) {
  SimConfig cfg;
  cfg.K = o.k;
  cfg.q = o.q;
  cfg.B = o.bits;
  cfg.T = o.epochs;
  cfg.scheme = scheme_from_name(o.scheme);
  cfg.mode = shuffle_mode_from_name(o.shuffle);
  cfg.seed = o.seed;

  if (cfg.scheme == SchemeKind::Combined) {
    if (o.layout_param.empty())
      throw std::invalid_argument("the combined scheme needs --layout-param M/q (e.g. 7/2)");
    cfg.m_over_q = rational_from_string(o.layout_param);
  } else if (cfg.scheme == SchemeKind::A || cfg.scheme == SchemeKind::B) {
    if (o.layout_param.empty())
      throw std::invalid_argument("scheme " + o.scheme + " needs --layout-param (g or m)");
    cfg.param = std::stoi(o.layout_param);
  } else if (!o.layout_param.empty()) {
    cfg.param = std::stoi(o.layout_param);
  }

  if (!o.init.empty()) cfg.init = parse_assignment(o.init, cfg.K, cfg.q, 0);
  if (cfg.mode == ShuffleMode::Scripted) {
    if (o.script.empty()) throw std::invalid_argument("scripted mode needs --script FILE");
    cfg.script = load_script(o.script, cfg.K, cfg.q);
    cfg.T = o.epochs > 1 ? o.epochs : (int)cfg.script.size();
  }

  SessionReport rep = run_session(cfg);

  int eff_param = cfg.param;
  if (cfg.scheme == SchemeKind::C) eff_param = 2;
  if (cfg.scheme == SchemeKind::Uncoded) eff_param = 1;
  std::string param_str = cfg.scheme == SchemeKind::Combined ? cfg.m_over_q.str()
                                                             : std::to_string(eff_param);
  std::string csv =
      "K,q,B,T,scheme,param,shuffle,seed,prng,epoch,assignment,full_derangement,"
      "total_bits,load,load_dec,load_over_q,load_over_q_dec,lower_bound,lower_bound_dec\n";
  for (const EpochStats& e : rep.epochs) {
    csv += std::to_string(cfg.K) + "," + std::to_string(cfg.q) + "," + std::to_string(rep.B) +
           "," + std::to_string(cfg.T) + "," + o.scheme + "," + param_str + "," + o.shuffle +
           "," + std::to_string(cfg.seed) + "," + rep.prng + "," + std::to_string(e.epoch) +
           ",\"" + assignment_str(e.assign) + "\"," + (e.full_derangement ? "1" : "0") + "," +
           std::to_string(e.total_bits) + "," + e.load.str() + "," + e.load.dec() + "," +
           e.load_over_q.str() + "," + e.load_over_q.dec() + "," +
           (e.lower_bound ? e.lower_bound->str() : "") + "," +
           (e.lower_bound ? e.lower_bound->dec() : "") + "\n";
  }
  write_file(fs::path(o.out) / "summary.csv", csv);

  std::string tr;
  for (const std::string& line : rep.trace) tr += line + "\n";
  write_file(fs::path(o.out) / "trace.log", tr);

  if (!rep.ok) {
    std::fprintf(stderr, "verification failure: %s\n", rep.failure.c_str());
    return 1;
  }
  std::printf("ok: %d epoch(s), B=%lld, worst load/q = %s (%s)\n", (int)rep.epochs.size(), rep.B,
              rep.worst_load_over_q.str().c_str(), rep.worst_load_over_q.dec().c_str());
  std::printf("wrote %s and %s\n", (fs::path(o.out) / "summary.csv").string().c_str(),
              (fs::path(o.out) / "trace.log").string().c_str());
  return 0;
}

struct CurveOpts {
  int k = 0;
  int q = 1;
  std::string grid;
  std::uint64_t seed = 0;
  std::string out = "out";
};

std::vector<Rational> curve_grid(int K, const std::string& spec) {
  std::set<Rational> pts;
  if (spec.empty()) {
    for (int m = 1; m <= K; ++m) pts.insert(Rational(m));
    for (int g = 1; g <= K - 1; ++g) pts.insert(Rational(K + g * (K - 1), K));
  } else {
    std::string cur;
    for (char c : spec + ",") {
      if (c == ',') {
        if (!trim(cur).empty()) pts.insert(rational_from_string(trim(cur)));
        cur.clear();
      } else {
        cur += c;
      }
    }
  }
  return {pts.begin(), pts.end()};
}

int run_curve(const CurveOpts& o) {
  const int K = o.k;
  std::vector<Rational> grid = curve_grid(K, o.grid);
  std::string csv =
      "K,q,M_over_q,M_over_q_dec,scheme,load_over_q,load_over_q_dec,"
      "converse_over_q,converse_over_q_dec,centralized_over_q,centralized_over_q_dec,"
      "embedded_baseline_over_q,embedded_baseline_over_q_dec,gap,gap_dec,p2p_cost,p2p_cost_dec\n";
  for (const Rational& M : grid) {
    std::vector<MixComponent> plan = combined_plan(K, M);
    Rational load;
    if (plan.size() == 1) {
      // hull corner: measure one worst-case epoch of the pure scheme
      SimConfig cfg;
      cfg.K = K;
      cfg.q = o.q;
      cfg.T = 1;
      cfg.scheme = plan[0].scheme;
      cfg.param = plan[0].param;
      cfg.mode = ShuffleMode::Worst;
      cfg.seed = o.seed;
      SessionReport rep = run_session(cfg);
      if (!rep.ok) {
        std::fprintf(stderr, "verification failure at M/q=%s: %s\n", M.str().c_str(),
                     rep.failure.c_str());
        return 1;
      }
      load = rep.worst_load_over_q;
      if (load != plan[0].load_over_q) {
        std::fprintf(stderr, "measured load %s at M/q=%s disagrees with the formula %s\n",
                     load.str().c_str(), M.str().c_str(), plan[0].load_over_q.str().c_str());
        return 1;
      }
    } else {
      load = combined_load_at(K, M);
    }
    Rational conv = converse_envelope_at(K, M);
    Rational cent = centralized_envelope_at(K, M);
    Rational emb = embedded_envelope_at(K, M);
    Rational gap = optimality_gap(K, M);
    Rational p2p = p2p_cost(K, M);
    csv += std::to_string(K) + "," + std::to_string(o.q) + "," + M.str() + "," + M.dec() + "," +
           plan_label(plan) + "," + load.str() + "," + load.dec() + "," + conv.str() + "," +
           conv.dec() + "," + cent.str() + "," + cent.dec() + "," + emb.str() + "," + emb.dec() +
           "," + gap.str() + "," + gap.dec() + "," + p2p.str() + "," + p2p.dec() + "\n";
  }
  write_file(fs::path(o.out) / "curve.csv", csv);
  std::printf("wrote %s (%d points)\n", (fs::path(o.out) / "curve.csv").string().c_str(),
              (int)grid.size());
  return 0;
}

struct BoundsOpts {
  int k = 0;
  std::string at;
};

int run_bounds(const BoundsOpts& o) {
  const int K = o.k;
  std::vector<Rational> pts;
  if (!o.at.empty()) {
    pts.push_back(rational_from_string(o.at));
  } else {
    for (int m = 1; m <= K; ++m) pts.push_back(Rational(m));
  }
  std::printf(
      "M_over_q,M_over_q_dec,converse_over_q,converse_over_q_dec,combined_over_q,"
      "combined_over_q_dec,centralized_over_q,centralized_over_q_dec,embedded_baseline_over_q,"
      "embedded_baseline_over_q_dec,gap,gap_dec,p2p_cost,p2p_cost_dec\n");
  for (const Rational& M : pts) {
    Rational conv = converse_envelope_at(K, M);
    Rational comb = combined_load_at(K, M);
    Rational cent = centralized_envelope_at(K, M);
    Rational emb = embedded_envelope_at(K, M);
    Rational gap = optimality_gap(K, M);
    Rational p2p = p2p_cost(K, M);
    std::printf("%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s\n", M.str().c_str(), M.dec().c_str(),
                conv.str().c_str(), conv.dec().c_str(), comb.str().c_str(), comb.dec().c_str(),
                cent.str().c_str(), cent.dec().c_str(), emb.str().c_str(), emb.dec().c_str(),
                gap.str().c_str(), gap.dec().c_str(), p2p.str().c_str(), p2p.dec().c_str());
  }
  return 0;
}

int run_golden() {
  std::vector<GoldenCheck> checks = run_verify_golden();
  for (const GoldenCheck& c : checks) {
    if (c.pass)
      std::printf("%s: PASS\n", c.name.c_str());
    else
      std::printf("%s: FAIL (%s)\n", c.name.c_str(), c.detail.c_str());
  }
  return all_pass(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized data shuffling: verified simulation and bounds"};
  app.require_subcommand(1);

  SimulateOpts so;
  CLI::App* sim = app.add_subcommand("simulate", "run a verified multi-epoch shuffle session");
  sim->add_option("--k", so.k, "number of workers")->required();
  sim->add_option("--q", so.q, "data units per worker");
  sim->add_option("--bits", so.bits, "bits per data unit (0 = smallest legal)");
  sim->add_option("--epochs", so.epochs, "number of shuffle epochs");
  sim->add_option("--scheme", so.scheme, "uncoded | a | b | c | combined");
  sim->add_option("--layout-param", so.layout_param, "g (scheme a), m (scheme b), or M/q (combined)");
  sim->add_option("--shuffle", so.shuffle, "worst | cyclic | random | scripted");
  sim->add_option("--seed", so.seed, "PRNG seed")->envname("SHUFFLE_SEED");
  sim->add_option("--script", so.script, "assignment script file for --shuffle scripted");
  sim->add_option("--init-assignment", so.init, "epoch-0 assignment, e.g. \"5,1,2,3,4\"");
  sim->add_option("--out", so.out, "output directory");
  sim->set_config("--config", "", "flat key=value config file");

  CurveOpts co;
  CLI::App* curve = app.add_subcommand("curve", "storage-load tradeoff with bound columns");
  curve->add_option("--k", co.k, "number of workers")->required();
  curve->add_option("--q", co.q, "data units per worker");
  curve->add_option("--grid", co.grid, "comma-separated M/q values (default: all corner points)");
  curve->add_option("--seed", co.seed, "PRNG seed for the corner measurements")->envname("SHUFFLE_SEED");
  curve->add_option("--out", co.out, "output directory");
  curve->set_config("--config", "", "flat key=value config file");

  BoundsOpts bo;
  CLI::App* bounds = app.add_subcommand("bounds", "print the bound table for K");
  bounds->add_option("--k", bo.k, "number of workers")->required();
  bounds->add_option("--at", bo.at, "single M/q value instead of the integer corners");

  CLI::App* golden = app.add_subcommand("verify-golden", "check the frozen reference fixtures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return run_simulate(so);
    if (curve->parsed()) return run_curve(co);
    if (bounds->parsed()) return run_bounds(bo);
    if (golden->parsed()) return run_golden();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
