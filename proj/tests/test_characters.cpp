#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include "charlab/characters.hpp"

using namespace charlab;

namespace {

// Brute-force Gauss sum oracle over the prime field, independent of the
// angle machinery: direct complex exponentials from integer arithmetic.
std::complex<double> gauss_oracle_prime(long long p, long long c, long long k,
                                        long long g) {
  std::complex<double> acc(0, 0);
  // dlog via running powers of g
  std::vector<long long> dl(p, 0);
  long long cur = 1;
  for (long long j = 0; j < p - 1; ++j) {
    dl[cur] = j;
    cur = cur * g % p;
  }
  const double tau = 6.283185307179586476925;
  for (long long x = 1; x < p; ++x) {
    double a = (double)(c * x % p) / (double)p;
    double b = (double)(k * dl[x] % (p - 1)) / (double)(p - 1);
    acc += std::polar(1.0, tau * (a + b));
  }
  return acc;
}

}  // namespace

TEST_CASE("psi_eval matches the definition on F_7") {
  Field f = Field::make(7, 1);
  AdditiveCharacter std_psi = AdditiveCharacter::standard();
  REQUIRE(psi_eval(f, std_psi, 3) == RationalAngle(3, 7));
  REQUIRE(psi_eval(f, std_psi, 0) == RationalAngle(0, 1));
}

TEST_CASE("psi_eval factors through the trace on F_9") {
  Field f = Field::make(3, 2);
  Fe X = f.encode({0, 1});
  REQUIRE(psi_eval(f, AdditiveCharacter::standard(), X) == RationalAngle(0, 1));
  REQUIRE(psi_eval(f, AdditiveCharacter::standard(), 1) == RationalAngle(2, 3));
}

TEST_CASE("chi_eval on F_7") {
  Field f = Field::make(7, 1);
  MultiplicativeCharacter quad = MultiplicativeCharacter::quadratic(f);
  REQUIRE(quad.k == 3);
  // dlog_3(3) = 1, angle = 3/6 = 1/2, i.e. the value -1
  CharacterValue v = chi_eval(f, quad, 3);
  REQUIRE(!v.zero);
  REQUIRE(v.angle == RationalAngle(1, 2));
  REQUIRE(chi_eval(f, quad, 0).zero);
  REQUIRE(chi_eval(f, MultiplicativeCharacter::trivial(), 5).angle ==
          RationalAngle(0, 1));
}

TEST_CASE("character orders") {
  Field f = Field::make(7, 1);
  REQUIRE(character_order(f, MultiplicativeCharacter{3}) == 2);
  REQUIRE(character_order(f, MultiplicativeCharacter{0}) == 1);
  REQUIRE(character_order(f, MultiplicativeCharacter{5}) == 6);
}

TEST_CASE("homomorphism identities hold exactly as rational angles") {
  for (auto [p, e] : std::vector<std::pair<long long, int>>{
           {7, 1}, {13, 1}, {2, 3}, {3, 2}, {5, 2}, {19, 1}}) {
    Field f = Field::make(p, e);
    AdditiveCharacter psi{f.from_int(2)};
    MultiplicativeCharacter chi{3};
    for (Fe a = 0; a < f.q(); ++a)
      for (Fe b = 0; b < f.q(); ++b) {
        REQUIRE(psi_eval(f, psi, f.add(a, b)) ==
                psi_eval(f, psi, a) + psi_eval(f, psi, b));
        if (a != 0 && b != 0) {
          REQUIRE(chi_eval(f, chi, f.mul(a, b)).angle ==
                  chi_eval(f, chi, a).angle + chi_eval(f, chi, b).angle);
        }
      }
  }
}

TEST_CASE("character orthogonality at double precision") {
  for (auto [p, e] : std::vector<std::pair<long long, int>>{
           {7, 1}, {31, 1}, {2, 5}, {3, 4}, {5, 3}, {11, 2}, {2039, 1}}) {
    Field f = Field::make(p, e);
    for (Fe c : {(Fe)1, (Fe)2}) {
      if (c >= f.q()) continue;
      std::complex<double> acc(0, 0);
      for (Fe x = 0; x < f.q(); ++x) acc += psi_complex(f, AdditiveCharacter{c}, x);
      REQUIRE(std::abs(acc) < 1e-9);
    }
    for (long long k : {1ll, 2ll, (long long)(f.q() - 1) / 2}) {
      if (k == 0) continue;
      MultiplicativeCharacter chi{k};
      if (chi_is_trivial(f, chi)) continue;
      std::complex<double> acc(0, 0);
      for (Fe x = 1; x < f.q(); ++x) acc += chi_complex(f, chi, x);
      REQUIRE(std::abs(acc) < 1e-9);
    }
  }
}

TEST_CASE("Gauss sums match the brute-force oracle and have magnitude sqrt q") {
  Field f = Field::make(13, 1);
  for (long long c = 1; c < 13; ++c)
    for (long long k = 1; k < 12; ++k) {
      std::complex<double> acc(0, 0);
      for (Fe x = 1; x < 13; ++x) {
        RationalAngle a = psi_eval(f, AdditiveCharacter{(Fe)c}, x) +
                          chi_eval(f, MultiplicativeCharacter{k}, x).angle;
        acc += a.to_complex();
      }
      std::complex<double> oracle = gauss_oracle_prime(13, c, k, f.generator());
      REQUIRE(std::abs(acc - oracle) < 1e-9);
      REQUIRE(std::abs(std::abs(acc) - std::sqrt(13.0)) < 1e-6);
    }
}
