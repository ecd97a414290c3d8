#pragma once

#include <complex>
#include <numeric>

#include "charlab/angle.hpp"
#include "charlab/field.hpp"

namespace charlab {

// Additive character Psi_c(x) = exp(2 pi i Tr(c x)/p). c = 1 is the standard
// character, c = 0 the trivial one.
struct AdditiveCharacter {
  Fe c = 1;
  static AdditiveCharacter standard() { return {1}; }
  static AdditiveCharacter trivial() { return {0}; }
  bool is_trivial() const { return c == 0; }
};

// Multiplicative character chi = chi_gamma^k, determined by sending the
// canonical generator to exp(2 pi i k/(q-1)). k = 0 is trivial.
struct MultiplicativeCharacter {
  long long k = 1;
  static MultiplicativeCharacter trivial() { return {0}; }
  static MultiplicativeCharacter primitive() { return {1}; }
  static MultiplicativeCharacter quadratic(const Field& f) {
    return {(long long)(f.q() - 1) / 2};
  }
};

inline RationalAngle psi_eval(const Field& f, AdditiveCharacter psi, Fe x) {
  return RationalAngle(f.trace(f.mul(psi.c, x)), f.p());
}

inline CharacterValue chi_eval(const Field& f, MultiplicativeCharacter chi, Fe x) {
  if (x == 0) return CharacterValue::make_zero();
  long long m = (long long)f.q() - 1;
  if (m == 0) return CharacterValue::make_angle(RationalAngle(0, 1));
  long long k = ((chi.k % m) + m) % m;
  __int128 n = (__int128)k * f.dlog(x) % m;
  return CharacterValue::make_angle(RationalAngle((long long)n, m));
}

inline long long character_order(const Field& f, MultiplicativeCharacter chi) {
  long long m = (long long)f.q() - 1;
  if (m == 0) return 1;
  long long k = ((chi.k % m) + m) % m;
  if (k == 0) return 1;
  return m / std::gcd(k, m);
}

inline bool chi_is_trivial(const Field& f, MultiplicativeCharacter chi) {
  return character_order(f, chi) == 1;
}

inline std::complex<double> psi_complex(const Field& f, AdditiveCharacter psi, Fe x) {
  return psi_eval(f, psi, x).to_complex();
}

inline std::complex<double> chi_complex(const Field& f, MultiplicativeCharacter chi,
                                        Fe x) {
  return chi_eval(f, chi, x).to_complex();
}

}  // namespace charlab
