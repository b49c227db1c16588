#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Core value types shared by every module: exact rationals, packed bit
// blocks with right-zero-pad XOR, worker sets, and epoch assignments.
// Worker ids and data unit ids are 1-based throughout.

namespace dshuffle {

using WorkerId = int;
using UnitId = int;

long long binom(int n, int k);

// ---------------------------------------------------------------------------
// Rational: exact arithmetic, always in lowest terms, den > 0.
// All protocol loads and bounds are computed exactly; floating point only
// appears when rendering CSV decimals.

struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n) : num(n), den(1) {}
  Rational(long long n, long long d);

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  std::strong_ordering operator<=>(const Rational& o) const;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;      // "p/q", or "p" when q == 1
  std::string dec() const;      // decimal with 12 significant digits
};

Rational rational_from_string(const std::string& s);  // "p", "p/q"

// ---------------------------------------------------------------------------
// BitBlock: a bit string. Zero length is valid and acts as the identity for
// xor_zero_pad. Bit i of the block is bit i of the logical string; hex
// rendering pads the tail to a nibble with zeros on the right.

class BitBlock {
 public:
  BitBlock() = default;
  explicit BitBlock(long long nbits) : nbits_(nbits), words_((nbits + 63) / 64, 0) {
    if (nbits < 0) throw std::invalid_argument("BitBlock: negative length");
  }

  static BitBlock from_string(const std::string& bits);  // e.g. "1010"
  static BitBlock random(long long nbits, std::mt19937_64& rng);

  long long size() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }
  bool get(long long i) const;
  void set(long long i, bool v);

  BitBlock slice(long long offset, long long len) const;
  void append(const BitBlock& o);  // concatenation

  std::string to_string() const;  // "1010"
  std::string hex() const;        // "<nbits>:<hexdigits>", "0:" when empty

  bool operator==(const BitBlock& o) const;

  friend BitBlock xor_zero_pad(const BitBlock& a, const BitBlock& b);

 private:
  long long nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

// XOR after zero-extending the shorter operand on the right to the longer
// length; result length is max(|a|, |b|).
BitBlock xor_zero_pad(const BitBlock& a, const BitBlock& b);

// ---------------------------------------------------------------------------
// WorkerSet: small set of worker ids (K <= 30), ordered like the sorted
// tuple of its elements (so {1,4} < {2,3}).

struct WorkerSet {
  std::uint32_t mask = 0;

  static WorkerSet of(std::initializer_list<int> ws);
  static WorkerSet full(int K);

  bool contains(int w) const { return mask >> (w - 1) & 1u; }
  void add(int w) { mask |= 1u << (w - 1); }
  void remove(int w) { mask &= ~(1u << (w - 1)); }
  int size() const { return __builtin_popcount(mask); }
  bool empty() const { return mask == 0; }
  std::vector<int> elements() const;
  int rank_of(int w) const;  // index of w among elements(), w must be present

  WorkerSet with(int w) const { WorkerSet s = *this; s.add(w); return s; }
  WorkerSet without(int w) const { WorkerSet s = *this; s.remove(w); return s; }

  bool operator==(const WorkerSet& o) const { return mask == o.mask; }
  std::strong_ordering operator<=>(const WorkerSet& o) const;

  std::string str() const;  // "{1,3}"
};

// ---------------------------------------------------------------------------
// Assignment: which worker processes which data units in an epoch. batches
// are 1-indexed by worker; every batch has exactly q units and the batches
// partition [1..K*q].

struct Assignment {
  int K = 0;
  int q = 0;
  int epoch = 0;
  std::vector<std::vector<UnitId>> batches;  // [K+1], index 0 unused, each sorted

  int N() const { return K * q; }
  const std::vector<UnitId>& units_of(WorkerId k) const { return batches.at(k); }
  bool assigned_to(UnitId i, WorkerId k) const;
  WorkerId worker_of(UnitId i) const;  // throws if unassigned

  bool operator==(const Assignment& o) const { return K == o.K && q == o.q && batches == o.batches; }
};

// Convenience constructors.
// Compact text form "1,2;3,4" (units within a batch comma-separated, batches
// separated by ';'; q=1 may omit the semicolons and list one unit per worker).
std::string assignment_str(const Assignment& a);
Assignment parse_assignment(const std::string& text, int K, int q, int epoch = 0);

Assignment make_assignment(int K, int q, const std::vector<std::vector<UnitId>>& batches,
                           int epoch = 0);
// q=1 shorthand: position k holds the unit of worker k.
Assignment make_assignment1(const std::vector<UnitId>& units, int epoch = 0);
// Identity assignment: worker k gets units (k-1)q+1 .. kq.
Assignment identity_assignment(int K, int q, int epoch = 0);

// Empty result means valid; otherwise the first violated clause in order:
// batch sizes, duplicate assignment, coverage of [1..K*q].
std::optional<std::string> validate_assignment(const Assignment& a, int K, int q);

// ---------------------------------------------------------------------------
// Scheme identifiers and the minimal block size each one requires. B must be
// a positive multiple of minimal_block_size for the chosen scheme; modules
// reject anything else with a divisibility error.

enum class SchemeKind { Uncoded, A, B, C, Combined };

std::string scheme_name(SchemeKind s);
SchemeKind scheme_from_name(const std::string& name);

// param is g for scheme A, m for scheme B (m in {K-2, K-1, K}); unused for
// uncoded (m=1) and C (m=2).
long long minimal_block_size(SchemeKind scheme, int K, int param = 0);

}  // namespace dshuffle
