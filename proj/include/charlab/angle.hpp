#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "charlab/rational.hpp"

namespace charlab {

// Exact point of S^1: e^{2*pi*i*num/den} with 0 <= num < den, gcd(num,den)=1.
// Character values live here so that homomorphism identities are exact
// rational facts; conversion to complex doubles happens only at summation
// boundaries.
struct RationalAngle {
  long long num = 0;
  long long den = 1;

  RationalAngle() = default;
  RationalAngle(long long n, long long d) {
    if (d == 0) throw std::domain_error("angle with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    n %= d;
    if (n < 0) n += d;
    long long g = std::gcd(n, d);
    num = n / g;
    den = d / g;
  }

  static RationalAngle from_rat(const Rat& r) { return RationalAngle(r.num, r.den); }
  Rat to_rat() const { return Rat(num, den); }

  friend RationalAngle operator+(const RationalAngle& a, const RationalAngle& b) {
    __int128 n = (__int128)a.num * b.den + (__int128)b.num * a.den;
    __int128 d = (__int128)a.den * b.den;
    n %= d;
    // reduce in 128 bits, then narrow
    __int128 x = n, y = d;
    while (y) { __int128 t = x % y; x = y; y = t; }
    if (x > 1) { n /= x; d /= x; }
    RationalAngle r;
    r.num = (long long)n;
    r.den = (long long)d;
    return r;
  }
  friend RationalAngle operator-(const RationalAngle& a, const RationalAngle& b) {
    return a + (-b);
  }
  RationalAngle operator-() const {
    RationalAngle r;
    r.num = num == 0 ? 0 : den - num;
    r.den = num == 0 ? 1 : den;
    return r;
  }
  // k-fold angle (the k-th power of the circle point).
  RationalAngle scaled(long long k) const {
    __int128 n = (__int128)(((k % den) + den) % den) * num % den;
    return RationalAngle((long long)n, den);
  }

  friend bool operator==(const RationalAngle& a, const RationalAngle& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const RationalAngle& a, const RationalAngle& b) {
    return !(a == b);
  }

  bool is_one() const { return num == 0; }  // the circle point 1

  // Multiplicative order of e^{2 pi i num/den}; the reduced denominator.
  long long order() const { return den; }

  double value() const { return (double)num / (double)den; }

  std::complex<double> to_complex() const {
    return std::polar(1.0, 2.0 * std::numbers::pi * value());
  }
};

// Value of a multiplicative character: a circle point, or the distinguished
// zero chi(0) = 0. Zero is a tag, never an angle, so products annihilate
// exactly.
struct CharacterValue {
  bool zero = false;
  RationalAngle angle;

  static CharacterValue make_zero() { CharacterValue v; v.zero = true; return v; }
  static CharacterValue make_angle(RationalAngle a) {
    CharacterValue v;
    v.angle = a;
    return v;
  }

  std::complex<double> to_complex() const {
    return zero ? std::complex<double>(0.0, 0.0) : angle.to_complex();
  }

  friend bool operator==(const CharacterValue& a, const CharacterValue& b) {
    if (a.zero || b.zero) return a.zero == b.zero;
    return a.angle == b.angle;
  }
};

}  // namespace charlab
