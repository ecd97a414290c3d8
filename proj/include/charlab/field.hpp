#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "charlab/errors.hpp"
#include "charlab/primes.hpp"

namespace charlab {

// An element of F_{p^e} in canonical form, packed as the radix-p encoding of
// its coefficient vector (low degree first). Codes compare in the canonical
// element order used for generator selection and point sorting.
using Fe = std::uint32_t;

struct FieldOptions {
  // Full exp/dlog tables are built when q <= table_cap. Above the cap,
  // discrete logs fall back to baby-step giant-step.
  std::uint64_t table_cap = 1ull << 22;
  // When set, table construction is mandatory and CapExceeded is raised if
  // q lies above the cap.
  bool require_tables = false;
};

// A concrete finite field F_{p^e}: modulus polynomial, generator, optional
// discrete-log tables, trace data. Immutable after construction and safe to
// share read-only across parallel workers.
class Field {
public:
  static Field make(long long p, int e,
                    std::optional<std::vector<long long>> modulus = std::nullopt,
                    FieldOptions options = {}) {
    if (p < 2 || !is_prime_u64((std::uint64_t)p)) throw NotPrimeError(p);
    if (e < 1) throw Error("extension degree must be >= 1");
    Field f;
    f.p_ = p;
    f.e_ = e;
    f.q_ = 1;
    for (int i = 0; i < e; ++i) {
      f.q_ *= (std::uint64_t)p;
      // element codes are 32-bit
      if (f.q_ > (1ull << 31)) throw CapExceededError(f.q_, 1ull << 31);
    }
    if (options.require_tables && f.q_ > options.table_cap)
      throw CapExceededError(f.q_, options.table_cap);

    if (modulus) {
      f.modulus_ = *modulus;
      if ((int)f.modulus_.size() != e + 1)
        throw NotIrreducibleError("modulus degree must equal extension degree");
      for (auto& c : f.modulus_) c = ((c % p) + p) % p;
      if (f.modulus_[e] != 1) throw NotIrreducibleError("modulus must be monic");
      if (e == 1) {
        if (f.modulus_ != std::vector<long long>{0, 1})
          throw NotIrreducibleError("degree-1 modulus must be X");
      } else if (!f.poly_is_irreducible(f.modulus_)) {
        throw NotIrreducibleError("supplied modulus is reducible");
      }
    } else {
      f.modulus_ = f.smallest_irreducible();
    }

    f.q1_factors_ = prime_divisors((long long)f.q_ - 1);
    f.find_generator();
    if (f.q_ <= options.table_cap) f.build_tables();
    f.compute_basis_traces();
    return f;
  }

  long long p() const { return p_; }
  int e() const { return e_; }
  std::uint64_t q() const { return q_; }
  const std::vector<long long>& modulus() const { return modulus_; }
  Fe generator() const { return gen_; }
  bool has_tables() const { return !dlog_table_.empty(); }

  Fe zero() const { return 0; }
  Fe one() const { return 1; }

  // Integer (or rational numerator) reduced into the prime subfield.
  Fe from_int(long long n) const {
    long long r = n % p_;
    if (r < 0) r += p_;
    return (Fe)r;
  }

  std::vector<long long> decode(Fe x) const {
    std::vector<long long> c(e_);
    for (int i = 0; i < e_; ++i) { c[i] = x % p_; x /= (Fe)p_; }
    return c;
  }
  Fe encode(const std::vector<long long>& c) const {
    Fe x = 0;
    for (int i = e_ - 1; i >= 0; --i) {
      long long d = ((c[i] % p_) + p_) % p_;
      x = (Fe)(x * p_ + d);
    }
    return x;
  }

  Fe add(Fe a, Fe b) const {
    if (e_ == 1) { Fe s = a + b; return s >= p_ ? s - (Fe)p_ : s; }
    Fe r = 0, mul = 1;
    for (int i = 0; i < e_; ++i) {
      Fe da = a % p_, db = b % p_;
      a /= (Fe)p_;
      b /= (Fe)p_;
      Fe d = da + db;
      if (d >= p_) d -= (Fe)p_;
      r += d * mul;
      mul *= (Fe)p_;
    }
    return r;
  }

  Fe neg(Fe a) const {
    if (e_ == 1) return a == 0 ? 0 : (Fe)p_ - a;
    Fe r = 0, mul = 1;
    for (int i = 0; i < e_; ++i) {
      Fe d = a % p_;
      a /= (Fe)p_;
      r += (d == 0 ? 0 : (Fe)p_ - d) * mul;
      mul *= (Fe)p_;
    }
    return r;
  }

  Fe sub(Fe a, Fe b) const { return add(a, neg(b)); }

  Fe mul(Fe a, Fe b) const {
    if (a == 0 || b == 0) return 0;
    if (e_ == 1) return (Fe)((std::uint64_t)a * b % (std::uint64_t)p_);
    if (has_tables()) {
      std::uint64_t s = (std::uint64_t)dlog_table_[a] + dlog_table_[b];
      std::uint64_t m = q_ - 1;
      if (s >= m) s -= m;
      return exp_table_[s];
    }
    auto pa = decode(a), pb = decode(b);
    return encode(poly_mul_mod(pa, pb));
  }

  Fe inv(Fe a) const {
    if (a == 0) throw DivisionByZeroError();
    if (has_tables()) {
      std::uint64_t d = dlog_table_[a];
      return exp_table_[d == 0 ? 0 : q_ - 1 - d];
    }
    if (e_ == 1) return (Fe)powmod_u64(a, (std::uint64_t)p_ - 2, (std::uint64_t)p_);
    return pow(a, (long long)q_ - 2);
  }

  Fe pow(Fe a, long long k) const {
    std::uint64_t m = q_ - 1;
    if (a == 0) {
      if (k == 0) return 1;
      if (k < 0) throw DivisionByZeroError();
      return 0;
    }
    long long r = k % (long long)m;
    if (r < 0) r += (long long)m;
    if (has_tables()) {
      std::uint64_t d = (std::uint64_t)((unsigned __int128)dlog_table_[a] * r % m);
      return exp_table_[d];
    }
    Fe base = a, acc = 1;
    std::uint64_t kk = (std::uint64_t)r;
    while (kk) {
      if (kk & 1) acc = mul(acc, base);
      base = mul(base, base);
      kk >>= 1;
    }
    return acc;
  }

  // Tr(x) = sum of x^{p^i}, an element of the prime field; computed from
  // precomputed basis traces by F_p-linearity.
  long long trace(Fe x) const {
    if (e_ == 1) return (long long)x;
    long long t = 0;
    for (int i = 0; i < e_; ++i) {
      t += (long long)(x % p_) * basis_traces_[i] % p_;
      x /= (Fe)p_;
    }
    return t % p_;
  }

  // Discrete log with respect to the canonical generator; table lookup when
  // present, baby-step giant-step otherwise.
  long long dlog(Fe x) const {
    if (x == 0) throw ZeroArgumentError();
    if (has_tables()) return (long long)dlog_table_[x];
    std::uint64_t m = q_ - 1;
    std::uint64_t s = 1;
    while (s * s < m) ++s;
    std::unordered_map<Fe, std::uint64_t> baby;
    baby.reserve(s * 2);
    Fe cur = 1;
    for (std::uint64_t j = 0; j < s; ++j) {
      baby.emplace(cur, j);
      cur = mul(cur, gen_);
    }
    Fe giant = inv(pow(gen_, (long long)s));
    Fe y = x;
    for (std::uint64_t i = 0; i <= s; ++i) {
      auto it = baby.find(y);
      if (it != baby.end()) return (long long)((i * s + it->second) % m);
      y = mul(y, giant);
    }
    throw Error("discrete log not found (element outside group?)");
  }

  // Multiplicative order of a nonzero element.
  long long element_order(Fe x) const {
    if (x == 0) throw ZeroArgumentError();
    long long m = (long long)q_ - 1;
    long long ord = m;
    for (long long df : q1_factors_) {
      while (ord % df == 0 && pow(x, ord / df) == 1) ord /= df;
    }
    return ord;
  }

  Fe exp_of(long long k) const {
    if (has_tables()) {
      long long m = (long long)q_ - 1;
      long long r = ((k % m) + m) % m;
      return exp_table_[r];
    }
    return pow(gen_, k);
  }

private:
  long long p_ = 2;
  int e_ = 1;
  std::uint64_t q_ = 2;
  std::vector<long long> modulus_;
  Fe gen_ = 1;
  std::vector<Fe> exp_table_;
  std::vector<Fe> dlog_table_;
  std::vector<long long> basis_traces_;
  std::vector<long long> q1_factors_;

  // --- construction-time polynomial arithmetic (coefficients mod p) ---

  std::vector<long long> poly_mul_mod(const std::vector<long long>& a,
                                      const std::vector<long long>& b) const {
    std::vector<long long> r(2 * e_ - 1, 0);
    for (int i = 0; i < e_; ++i) {
      if (a[i] == 0) continue;
      for (int j = 0; j < e_; ++j) r[i + j] = (r[i + j] + a[i] * b[j]) % p_;
    }
    // reduce modulo the monic modulus
    for (int d = 2 * e_ - 2; d >= e_; --d) {
      long long c = r[d] % p_;
      if (c == 0) continue;
      r[d] = 0;
      for (int i = 0; i < e_; ++i)
        r[d - e_ + i] = ((r[d - e_ + i] - c * modulus_[i]) % p_ + p_) % p_;
    }
    r.resize(e_);
    return r;
  }

  // Remainder of f by a monic divisor g, both as coefficient vectors mod p.
  static std::vector<long long> poly_rem(std::vector<long long> f,
                                         const std::vector<long long>& g,
                                         long long p) {
    int dg = (int)g.size() - 1;
    for (int d = (int)f.size() - 1; d >= dg; --d) {
      long long c = f[d] % p;
      if (c == 0) continue;
      for (int i = 0; i <= dg; ++i)
        f[d - dg + i] = ((f[d - dg + i] - c * g[i]) % p + p) % p;
    }
    f.resize(dg);
    return f;
  }

  bool poly_is_irreducible(const std::vector<long long>& f) const {
    int deg = (int)f.size() - 1;
    // no roots
    for (long long x = 0; x < p_; ++x) {
      long long v = 0;
      for (int i = deg; i >= 0; --i) v = (v * x + f[i]) % p_;
      if (v == 0) return false;
    }
    if (deg <= 3) return true;
    // trial division by all monic divisors of degree 2..deg/2
    for (int d = 2; d <= deg / 2; ++d) {
      std::uint64_t count = 1;
      for (int i = 0; i < d; ++i) count *= (std::uint64_t)p_;
      for (std::uint64_t code = 0; code < count; ++code) {
        std::vector<long long> g(d + 1, 0);
        std::uint64_t c = code;
        for (int i = 0; i < d; ++i) { g[i] = (long long)(c % p_); c /= p_; }
        g[d] = 1;
        auto r = poly_rem(f, g, p_);
        bool zero = true;
        for (long long x : r)
          if (x != 0) { zero = false; break; }
        if (zero) return false;
      }
    }
    return true;
  }

  std::vector<long long> smallest_irreducible() const {
    if (e_ == 1) return {0, 1};
    // lexicographically smallest coefficient sequence, compared low degree
    // first: the constant coefficient is the most significant sort key
    std::uint64_t count = 1;
    for (int i = 0; i < e_; ++i) count *= (std::uint64_t)p_;
    for (std::uint64_t code = 0; code < count; ++code) {
      std::vector<long long> f(e_ + 1, 0);
      std::uint64_t c = code;
      for (int i = e_ - 1; i >= 0; --i) { f[i] = (long long)(c % p_); c /= p_; }
      f[e_] = 1;
      if (poly_is_irreducible(f)) return f;
    }
    throw NotIrreducibleError("no irreducible modulus found");
  }

  void find_generator() {
    long long m = (long long)q_ - 1;
    for (std::uint64_t cand = 1; cand < q_; ++cand) {
      Fe x = (Fe)cand;
      bool full = true;
      for (long long df : q1_factors_) {
        if (pow_notable(x, m / df) == 1) { full = false; break; }
      }
      if (full) { gen_ = x; return; }
    }
    throw Error("no generator found");
  }

  // pow without tables (used before tables exist)
  Fe pow_notable(Fe a, long long k) const {
    if (a == 0) return k == 0 ? 1 : 0;
    Fe base = a, acc = 1;
    while (k) {
      if (k & 1) acc = mul_notable(acc, base);
      base = mul_notable(base, base);
      k >>= 1;
    }
    return acc;
  }

  Fe mul_notable(Fe a, Fe b) const {
    if (a == 0 || b == 0) return 0;
    if (e_ == 1) return (Fe)((std::uint64_t)a * b % (std::uint64_t)p_);
    auto pa = decode(a), pb = decode(b);
    return encode(poly_mul_mod(pa, pb));
  }

  void build_tables() {
    std::uint64_t m = q_ - 1;
    exp_table_.resize(m);
    dlog_table_.assign(q_, 0);
    Fe cur = 1;
    for (std::uint64_t j = 0; j < m; ++j) {
      exp_table_[j] = cur;
      dlog_table_[cur] = (Fe)j;
      cur = mul_notable(cur, gen_);
    }
    if (cur != 1) throw Error("generator order check failed");
  }

  void compute_basis_traces() {
    basis_traces_.assign(e_, 0);
    if (e_ == 1) { basis_traces_[0] = 1; return; }
    for (int j = 0; j < e_; ++j) {
      std::vector<long long> b(e_, 0);
      b[j] = 1;
      Fe bj = encode(b);
      Fe acc = bj, frob = bj;
      for (int i = 1; i < e_; ++i) {
        frob = pow_notable(frob, p_);
        acc = add(acc, frob);
      }
      auto c = decode(acc);
      for (int i = 1; i < e_; ++i)
        if (c[i] != 0) throw Error("trace of basis element not in prime field");
      basis_traces_[j] = c[0];
    }
  }
};

}  // namespace charlab
