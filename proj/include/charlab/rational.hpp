#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace charlab {

// Exact rational with 64-bit numerator/denominator and 128-bit intermediates.
// All values at desk scale fit comfortably; overflow throws rather than wraps.
struct Rat {
  long long num = 0;
  long long den = 1;  // always > 0

  Rat() = default;
  Rat(long long n) : num(n), den(1) {}
  Rat(long long n, long long d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  static Rat from_128(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b) { __int128 t = a % b; a = b; b = t; }
    if (a > 1) { n /= a; d /= a; }
    constexpr __int128 lim = (__int128)1 << 62;
    if (n >= lim || n <= -lim || d >= lim)
      throw std::overflow_error("rational overflow");
    Rat r;
    r.num = (long long)n;
    r.den = (long long)d;
    return r;
  }

  friend Rat operator+(const Rat& a, const Rat& b) {
    return from_128((__int128)a.num * b.den + (__int128)b.num * a.den,
                    (__int128)a.den * b.den);
  }
  friend Rat operator-(const Rat& a, const Rat& b) {
    return from_128((__int128)a.num * b.den - (__int128)b.num * a.den,
                    (__int128)a.den * b.den);
  }
  friend Rat operator*(const Rat& a, const Rat& b) {
    return from_128((__int128)a.num * b.num, (__int128)a.den * b.den);
  }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.num == 0) throw std::domain_error("rational division by zero");
    return from_128((__int128)a.num * b.den, (__int128)a.den * b.num);
  }
  Rat operator-() const { Rat r; r.num = -num; r.den = den; return r; }

  friend bool operator==(const Rat& a, const Rat& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) {
    return (__int128)a.num * b.den < (__int128)b.num * a.den;
  }
  friend bool operator<=(const Rat& a, const Rat& b) { return !(b < a); }
  friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
  friend bool operator>=(const Rat& a, const Rat& b) { return !(a < b); }

  bool is_zero() const { return num == 0; }
  bool is_integer() const { return den == 1; }
  double to_double() const { return (double)num / (double)den; }

  Rat abs() const { Rat r = *this; if (r.num < 0) r.num = -r.num; return r; }

  Rat inverse() const {
    if (num == 0) throw std::domain_error("rational inverse of zero");
    return Rat(den, num);
  }

  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

}  // namespace charlab
