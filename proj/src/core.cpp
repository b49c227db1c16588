#include "dshuffle/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

namespace dshuffle {

long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// ---------------------------------------------------------------------------
// Rational

namespace {

long long checked(__int128 v, const char* what) {
  if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error(std::string("Rational overflow in ") + what);
  return static_cast<long long>(v);
}

}  // namespace

Rational::Rational(long long n, long long d) : num(n), den(d) {
  if (den == 0) throw std::invalid_argument("Rational: zero denominator");
  if (den < 0) { num = -num; den = -den; }
  long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) { num /= g; den /= g; }
}

namespace {

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  while (b) { __int128 t = a % b; a = b; b = t; }
  return a == 0 ? 1 : a;
}

}  // namespace

Rational Rational::operator+(const Rational& o) const {
  __int128 n = (__int128)num * o.den + (__int128)o.num * den;
  __int128 d = (__int128)den * o.den;
  __int128 g = gcd128(n, d);
  return Rational(checked(n / g, "+"), checked(d / g, "+"));
}

Rational Rational::operator-(const Rational& o) const { return *this + Rational(-o.num, o.den); }

Rational Rational::operator*(const Rational& o) const {
  __int128 n = (__int128)num * o.num;
  __int128 d = (__int128)den * o.den;
  __int128 g = gcd128(n, d);
  return Rational(checked(n / g, "*"), checked(d / g, "*"));
}

Rational Rational::operator/(const Rational& o) const {
  if (o.num == 0) throw std::domain_error("Rational: division by zero");
  return *this * Rational(o.den, o.num);
}

std::strong_ordering Rational::operator<=>(const Rational& o) const {
  __int128 l = (__int128)num * o.den;
  __int128 r = (__int128)o.num * den;
  if (l < r) return std::strong_ordering::less;
  if (l > r) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::string Rational::dec() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value());
  return buf;
}

Rational rational_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(s));
    return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
  } catch (const std::logic_error&) {
    throw std::invalid_argument("bad rational: '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// BitBlock

BitBlock BitBlock::from_string(const std::string& bits) {
  BitBlock b((long long)bits.size());
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw std::invalid_argument("BitBlock: bad bit char");
    b.set((long long)i, bits[i] == '1');
  }
  return b;
}

BitBlock BitBlock::random(long long nbits, std::mt19937_64& rng) {
  BitBlock b(nbits);
  for (auto& w : b.words_) w = rng();
  long long tail = nbits % 64;
  if (tail && !b.words_.empty()) b.words_.back() &= (~0ULL) >> (64 - tail);
  return b;
}

bool BitBlock::get(long long i) const {
  if (i < 0 || i >= nbits_) throw std::out_of_range("BitBlock::get");
  return words_[i / 64] >> (i % 64) & 1ULL;
}

void BitBlock::set(long long i, bool v) {
  if (i < 0 || i >= nbits_) throw std::out_of_range("BitBlock::set");
  if (v) words_[i / 64] |= 1ULL << (i % 64);
  else words_[i / 64] &= ~(1ULL << (i % 64));
}

BitBlock BitBlock::slice(long long offset, long long len) const {
  if (offset < 0 || len < 0 || offset + len > nbits_) throw std::out_of_range("BitBlock::slice");
  BitBlock r(len);
  for (long long i = 0; i < len; ++i) r.set(i, get(offset + i));
  return r;
}

void BitBlock::append(const BitBlock& o) {
  long long base = nbits_;
  nbits_ += o.nbits_;
  words_.resize((nbits_ + 63) / 64, 0);
  for (long long i = 0; i < o.nbits_; ++i) set(base + i, o.get(i));
}

std::string BitBlock::to_string() const {
  std::string s;
  s.reserve(nbits_);
  for (long long i = 0; i < nbits_; ++i) s.push_back(get(i) ? '1' : '0');
  return s;
}

std::string BitBlock::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string s = std::to_string(nbits_) + ":";
  for (long long i = 0; i < nbits_; i += 4) {
    int nib = 0;
    for (int j = 0; j < 4; ++j)
      if (i + j < nbits_ && get(i + j)) nib |= 8 >> j;
    s.push_back(digits[nib]);
  }
  return s;
}

bool BitBlock::operator==(const BitBlock& o) const {
  return nbits_ == o.nbits_ && words_ == o.words_;
}

BitBlock xor_zero_pad(const BitBlock& a, const BitBlock& b) {
  const BitBlock& lo = a.nbits_ <= b.nbits_ ? a : b;
  const BitBlock& hi = a.nbits_ <= b.nbits_ ? b : a;
  BitBlock r = hi;
  for (size_t w = 0; w < lo.words_.size(); ++w) r.words_[w] ^= lo.words_[w];
  return r;
}

// ---------------------------------------------------------------------------
// WorkerSet

WorkerSet WorkerSet::of(std::initializer_list<int> ws) {
  WorkerSet s;
  for (int w : ws) s.add(w);
  return s;
}

WorkerSet WorkerSet::full(int K) {
  WorkerSet s;
  s.mask = (K >= 32 ? ~0u : (1u << K) - 1u);
  return s;
}

std::vector<int> WorkerSet::elements() const {
  std::vector<int> v;
  for (int w = 1; w <= 32; ++w)
    if (contains(w)) v.push_back(w);
  return v;
}

int WorkerSet::rank_of(int w) const {
  if (!contains(w)) throw std::invalid_argument("WorkerSet::rank_of: absent element");
  return __builtin_popcount(mask & ((1u << (w - 1)) - 1u));
}

std::strong_ordering WorkerSet::operator<=>(const WorkerSet& o) const {
  // Order as sorted tuples, e.g. {1,4} < {2,3}.
  std::uint32_t a = mask, b = o.mask;
  while (a && b) {
    int ea = __builtin_ctz(a) + 1, eb = __builtin_ctz(b) + 1;
    if (ea != eb) return ea <=> eb;
    a &= a - 1;
    b &= b - 1;
  }
  return __builtin_popcount(mask) <=> __builtin_popcount(o.mask);
}

std::string WorkerSet::str() const {
  std::string s = "{";
  bool first = true;
  for (int w : elements()) {
    if (!first) s += ",";
    s += std::to_string(w);
    first = false;
  }
  return s + "}";
}

// ---------------------------------------------------------------------------
// Assignment

bool Assignment::assigned_to(UnitId i, WorkerId k) const {
  const auto& b = batches.at(k);
  return std::binary_search(b.begin(), b.end(), i);
}

WorkerId Assignment::worker_of(UnitId i) const {
  for (int k = 1; k <= K; ++k)
    if (assigned_to(i, k)) return k;
  throw std::invalid_argument("Assignment::worker_of: unit " + std::to_string(i) + " unassigned");
}

Assignment make_assignment(int K, int q, const std::vector<std::vector<UnitId>>& batches,
                           int epoch) {
  Assignment a;
  a.K = K;
  a.q = q;
  a.epoch = epoch;
  a.batches.resize(K + 1);
  if ((int)batches.size() != K) throw std::invalid_argument("make_assignment: need K batches");
  for (int k = 1; k <= K; ++k) {
    a.batches[k] = batches[k - 1];
    std::sort(a.batches[k].begin(), a.batches[k].end());
  }
  return a;
}

std::string assignment_str(const Assignment& a) {
  std::string s;
  for (int k = 1; k <= a.K; ++k) {
    if (k > 1) s += ';';
    for (std::size_t j = 0; j < a.batches[k].size(); ++j) {
      if (j > 0) s += ',';
      s += std::to_string(a.batches[k][j]);
    }
  }
  return s;
}

Assignment parse_assignment(const std::string& text, int K, int q, int epoch) {
  std::vector<std::vector<UnitId>> batches;
  std::vector<UnitId> cur;
  std::string tok;
  auto flush_tok = [&] {
    if (tok.empty()) throw std::invalid_argument("bad assignment text: empty unit id");
    cur.push_back(std::stoi(tok));
    tok.clear();
  };
  for (char c : text) {
    if (std::isspace((unsigned char)c)) continue;
    if (c == ',' || c == ';') {
      flush_tok();
      if (c == ';') {
        batches.push_back(cur);
        cur.clear();
      }
    } else if (std::isdigit((unsigned char)c)) {
      tok += c;
    } else {
      throw std::invalid_argument(std::string("bad assignment text: character '") + c + "'");
    }
  }
  if (!tok.empty()) flush_tok();
  if (!cur.empty()) batches.push_back(cur);
  // "5,1,2,3,4" with q=1 means one unit per worker
  if (q == 1 && batches.size() == 1 && (int)batches[0].size() == K) {
    std::vector<std::vector<UnitId>> split;
    for (UnitId u : batches[0]) split.push_back({u});
    batches = split;
  }
  Assignment a = make_assignment(K, q, batches, epoch);
  if (auto err = validate_assignment(a, K, q)) throw std::invalid_argument("bad assignment text: " + *err);
  return a;
}

Assignment make_assignment1(const std::vector<UnitId>& units, int epoch) {
  std::vector<std::vector<UnitId>> b;
  for (UnitId u : units) b.push_back({u});
  return make_assignment((int)units.size(), 1, b, epoch);
}

Assignment identity_assignment(int K, int q, int epoch) {
  std::vector<std::vector<UnitId>> b(K);
  for (int k = 1; k <= K; ++k)
    for (int j = 0; j < q; ++j) b[k - 1].push_back((k - 1) * q + j + 1);
  return make_assignment(K, q, b, epoch);
}

std::optional<std::string> validate_assignment(const Assignment& a, int K, int q) {
  if (a.K != K || a.q != q || (int)a.batches.size() != K + 1)
    return "assignment shape does not match K=" + std::to_string(K) + " q=" + std::to_string(q);
  for (int k = 1; k <= K; ++k)
    if ((int)a.batches[k].size() != q)
      return "worker " + std::to_string(k) + " batch has size " +
             std::to_string(a.batches[k].size()) + ", expected q=" + std::to_string(q);
  std::vector<int> seen(K * q + 1, 0);
  for (int k = 1; k <= K; ++k)
    for (UnitId i : a.batches[k]) {
      if (i < 1 || i > K * q) return "unit " + std::to_string(i) + " out of range [1.." + std::to_string(K * q) + "]";
      if (seen[i]++) return "unit " + std::to_string(i) + " assigned more than once";
    }
  for (UnitId i = 1; i <= K * q; ++i)
    if (!seen[i]) return "unit " + std::to_string(i) + " not assigned";
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scheme identifiers

std::string scheme_name(SchemeKind s) {
  switch (s) {
    case SchemeKind::Uncoded: return "uncoded";
    case SchemeKind::A: return "a";
    case SchemeKind::B: return "b";
    case SchemeKind::C: return "c";
    case SchemeKind::Combined: return "combined";
  }
  throw std::logic_error("scheme_name");
}

SchemeKind scheme_from_name(const std::string& name) {
  if (name == "uncoded") return SchemeKind::Uncoded;
  if (name == "a" || name == "A") return SchemeKind::A;
  if (name == "b" || name == "B") return SchemeKind::B;
  if (name == "c" || name == "C") return SchemeKind::C;
  if (name == "combined") return SchemeKind::Combined;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

long long minimal_block_size(SchemeKind scheme, int K, int param) {
  if (K < 3) throw std::invalid_argument("minimal_block_size: K must be >= 3");
  switch (scheme) {
    case SchemeKind::Uncoded:
      return 1;
    case SchemeKind::A: {
      int g = param;
      if (g < 1 || g > K - 1) throw std::invalid_argument("minimal_block_size: scheme a needs g in [1..K-1]");
      return g * binom(K, g);
    }
    case SchemeKind::B: {
      int m = param;
      if (m == K) return 1;
      if (m == K - 1) return (long long)(K - 1) * (K - 1);
      if (m == K - 2) return (long long)(K - 2) * binom(K - 1, 2);
      throw std::invalid_argument("minimal_block_size: scheme b needs m in {K-2, K-1, K}");
    }
    case SchemeKind::C:
      return 3LL * (K - 1);
    case SchemeKind::Combined:
      throw std::invalid_argument("minimal_block_size: combined block size depends on M/q; use the mixture plan");
  }
  throw std::logic_error("minimal_block_size");
}

}  // namespace dshuffle
