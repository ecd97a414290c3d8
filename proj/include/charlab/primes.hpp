#pragma once

#include <cstdint>
#include <vector>

namespace charlab {

inline std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return (std::uint64_t)((unsigned __int128)a * b % m);
}

inline std::uint64_t powmod_u64(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  if (m == 1) return 0;
  std::uint64_t r = 1;
  base %= m;
  while (exp) {
    if (exp & 1) r = mulmod_u64(r, base, m);
    base = mulmod_u64(base, base, m);
    exp >>= 1;
  }
  return r;
}

// Deterministic Miller-Rabin for 64-bit inputs.
inline bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                          29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) { d >>= 1; ++s; }
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                          29ull, 31ull, 37ull}) {
    std::uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 0; i < s - 1; ++i) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) { composite = false; break; }
    }
    if (composite) return false;
  }
  return true;
}

inline std::vector<long long> primes_in_range(long long lo, long long hi) {
  std::vector<long long> out;
  if (hi < 2) return out;
  if (lo < 2) lo = 2;
  std::vector<bool> sieve(hi + 1, true);
  sieve[0] = sieve[1] = false;
  for (long long i = 2; i * i <= hi; ++i)
    if (sieve[i])
      for (long long j = i * i; j <= hi; j += i) sieve[j] = false;
  for (long long i = lo; i <= hi; ++i)
    if (sieve[i]) out.push_back(i);
  return out;
}

// Prime factorization by trial division; fine for the desk-scale inputs
// (q - 1 < 2^44).
inline std::vector<std::pair<long long, int>> factorize(long long n) {
  std::vector<std::pair<long long, int>> f;
  for (long long d = 2; d * d <= n; d += (d == 2 ? 1 : 2)) {
    if (n % d == 0) {
      int e = 0;
      while (n % d == 0) { n /= d; ++e; }
      f.emplace_back(d, e);
    }
  }
  if (n > 1) f.emplace_back(n, 1);
  return f;
}

inline std::vector<long long> prime_divisors(long long n) {
  std::vector<long long> out;
  for (auto& [p, e] : factorize(n)) out.push_back(p);
  return out;
}

}  // namespace charlab
