#pragma once

// Epoch-by-epoch shuffling sessions over real bits. Every epoch is encoded,
// broadcast, decoded and verified: decoded units must match ground truth
// bit-exactly, storage must stay within budget, layouts must stay canonical,
// and the measured load must sit between the per-shuffle lower bound and the
// worst-case formula. Identical (config, seed) pairs reproduce identical
// reports and traces.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dshuffle/core.hpp"
#include "dshuffle/schemes.hpp"

namespace dshuffle {

enum class ShuffleMode { Worst, Cyclic, Random, Scripted };

std::string shuffle_mode_name(ShuffleMode m);
ShuffleMode shuffle_mode_from_name(const std::string& name);

struct SimConfig {
  int K = 0;
  int q = 1;
  long long B = 0;  // bits per unit; 0 = smallest legal size for the scheme
  int T = 1;        // epochs
  SchemeKind scheme = SchemeKind::Uncoded;
  int param = 0;        // g (scheme A) or m (scheme B); ignored otherwise
  Rational m_over_q;    // storage target, combined scheme only
  ShuffleMode mode = ShuffleMode::Worst;
  std::uint64_t seed = 0;
  std::vector<Assignment> script;    // one entry per epoch, Scripted mode
  std::optional<Assignment> init;    // epoch-0 assignment; identity if absent
};

struct EpochStats {
  int epoch = 0;
  Assignment assign;            // assignment after this epoch's shuffle
  bool full_derangement = false;
  long long total_bits = 0;     // sum of broadcast payload sizes
  Rational load;                // total_bits / B
  Rational load_over_q;         // load / q
  std::optional<Rational> lower_bound;  // per-shuffle bound when d is a batch derangement
};

struct SessionReport {
  std::string prng = "std::mt19937_64";
  SimConfig cfg;
  long long B = 0;  // actual block size used (cfg.B after defaulting)
  std::vector<EpochStats> epochs;
  Rational worst_load_over_q;
  bool ok = false;
  std::string failure;             // first violated constraint, empty when ok
  std::vector<std::string> trace;  // one line per broadcast message
};

// Unbiased integer in [0, n) by rejection; deterministic across platforms.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n);

// Uniformly random derangement of [1..K] (d[k-1] != k), by rejection.
std::vector<int> random_derangement(int K, std::mt19937_64& rng);

// Next epoch's assignment. Worst permutes previous batches by a uniform
// random derangement, Cyclic shifts batches by one worker, Random is uniform
// over all assignments, Scripted replays script[epoch-1].
Assignment gen_shuffle(ShuffleMode mode, const Assignment& a_prev, std::mt19937_64& rng,
                       const std::vector<Assignment>& script, int epoch);

// True when no worker keeps any unit from its previous batch.
bool is_full_derangement(const Assignment& prev, const Assignment& next);

// If next's batches are exactly prev's batches moved between workers with
// nobody keeping its own, returns d with next.batches[k] =
// prev.batches[d[k-1]]; otherwise nullopt.
std::optional<std::vector<int>> batch_derangement_of(const Assignment& prev,
                                                     const Assignment& next);

// Smallest legal block size for the config (mixture-aware for Combined).
long long default_block_bits(const SimConfig& cfg);

// Run T epochs with full verification. Configuration problems throw
// std::invalid_argument; verification failures come back in the report with
// ok = false and the epoch, worker, and constraint named in `failure`.
SessionReport run_session(const SimConfig& cfg);

}  // namespace dshuffle
