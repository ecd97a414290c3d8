#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "charlab/field.hpp"

using namespace charlab;

namespace {

// Independent oracle: order of x in (Z/p)^* by repeated multiplication.
long long naive_order_mod_p(long long x, long long p) {
  long long cur = x % p, ord = 1;
  while (cur != 1) {
    cur = cur * x % p;
    ++ord;
  }
  return ord;
}

// Independent oracle: multiply polynomials mod (X^2+1, 3) by hand.
std::pair<long long, long long> f9_mul(std::pair<long long, long long> a,
                                       std::pair<long long, long long> b) {
  // (a0 + a1 X)(b0 + b1 X) = a0 b0 + (a0 b1 + a1 b0) X + a1 b1 X^2,
  // X^2 = -1
  long long c0 = (a.first * b.first - a.second * b.second) % 3;
  long long c1 = (a.first * b.second + a.second * b.first) % 3;
  return {(c0 + 3) % 3, (c1 + 3) % 3};
}

}  // namespace

TEST_CASE("prime field construction picks the smallest primitive root") {
  Field f = Field::make(7, 1);
  REQUIRE(f.q() == 7);
  // oracle: smallest x in 2..6 with order 6
  long long expected = 0;
  for (long long x = 2; x < 7; ++x)
    if (naive_order_mod_p(x, 7) == 6) { expected = x; break; }
  REQUIRE(expected == 3);
  REQUIRE(f.generator() == (Fe)expected);
}

TEST_CASE("F_2 is handled") {
  Field f = Field::make(2, 1);
  REQUIRE(f.q() == 2);
  REQUIRE(f.generator() == 1);
  REQUIRE(f.add(1, 1) == 0);
  REQUIRE(f.mul(1, 1) == 1);
}

TEST_CASE("modulus selection compares coefficient sequences low-degree-first") {
  // over F_2 both X^3+X+1 and X^3+X^2+1 are irreducible; comparing
  // (c0, c1, c2) left to right picks (1, 0, 1), i.e. X^3+X^2+1
  Field f8 = Field::make(2, 3);
  REQUIRE(f8.modulus() == std::vector<long long>{1, 0, 1, 1});
}

TEST_CASE("F_9 gets modulus X^2+1 by the lexicographic scan") {
  // oracle: enumerate monic quadratics over F_3 low-degree-first and find the
  // first with no root
  std::vector<long long> first;
  for (long long c0 = 0; c0 < 3 && first.empty(); ++c0)
    for (long long c1 = 0; c1 < 3 && first.empty(); ++c1) {
      bool has_root = false;
      for (long long x = 0; x < 3; ++x)
        if ((x * x + c1 * x + c0) % 3 == 0) has_root = true;
      if (!has_root) first = {c0, c1, 1};
    }
  REQUIRE(first == std::vector<long long>{1, 0, 1});  // X^2 + 1

  Field f = Field::make(3, 2);
  REQUIRE(f.q() == 9);
  REQUIRE(f.modulus() == first);
}

TEST_CASE("F_9 multiplication matches the hand oracle") {
  Field f = Field::make(3, 2);
  // X has coefficients (0, 1) -> code 3
  Fe X = f.encode({0, 1});
  REQUIRE(f.mul(X, X) == f.from_int(2));  // X^2 = -1 = 2
  // exhaustive against the oracle
  for (Fe a = 0; a < 9; ++a)
    for (Fe b = 0; b < 9; ++b) {
      auto ca = f.decode(a), cb = f.decode(b);
      auto expect = f9_mul({ca[0], ca[1]}, {cb[0], cb[1]});
      REQUIRE(f.decode(f.mul(a, b)) ==
              std::vector<long long>{expect.first, expect.second});
    }
}

TEST_CASE("rejects composite characteristic and reducible moduli") {
  REQUIRE_THROWS_AS(Field::make(6, 1), NotPrimeError);
  // X^2 - 1 = (X-1)(X+1) over F_3
  REQUIRE_THROWS_AS(Field::make(3, 2, std::vector<long long>{2, 0, 1}),
                    NotIrreducibleError);
  FieldOptions opt;
  opt.table_cap = 1 << 10;
  opt.require_tables = true;
  REQUIRE_THROWS_AS(Field::make(7, 4, std::nullopt, opt), CapExceededError);
}

TEST_CASE("field arithmetic identities on random triples") {
  std::mt19937 rng(12345);
  for (long long q_spec : {7, 31, 8, 9, 27, 49, 121}) {
    long long p = q_spec;
    int e = 1;
    if (q_spec == 8) { p = 2; e = 3; }
    if (q_spec == 9) { p = 3; e = 2; }
    if (q_spec == 27) { p = 3; e = 3; }
    if (q_spec == 49) { p = 7; e = 2; }
    if (q_spec == 121) { p = 11; e = 2; }
    Field f = Field::make(p, e);
    std::uniform_int_distribution<Fe> dist(0, (Fe)f.q() - 1);
    for (int it = 0; it < 10000; ++it) {
      Fe a = dist(rng), b = dist(rng), c = dist(rng);
      REQUIRE(f.add(f.add(a, b), c) == f.add(a, f.add(b, c)));
      REQUIRE(f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)));
      if (a != 0) REQUIRE(f.mul(a, f.inv(a)) == 1);
    }
    REQUIRE_THROWS_AS(f.inv(0), DivisionByZeroError);
  }
}

TEST_CASE("trace values and fiber sizes") {
  Field f7 = Field::make(7, 1);
  REQUIRE(f7.trace(5) == 5);  // e=1: identity

  Field f9 = Field::make(3, 2);
  Fe X = f9.encode({0, 1});
  // oracle: Tr(X) = X + X^3; X^3 = X * X^2 = -X, so Tr(X) = 0
  REQUIRE(f9.trace(X) == 0);
  REQUIRE(f9.trace(1) == 2);  // Tr(1) = e * 1 = 2 mod 3

  // additivity and Frobenius invariance, exhaustive
  for (Fe a = 0; a < 9; ++a) {
    REQUIRE(f9.trace(f9.pow(a, 3)) == f9.trace(a));
    for (Fe b = 0; b < 9; ++b)
      REQUIRE((f9.trace(a) + f9.trace(b)) % 3 == f9.trace(f9.add(a, b)));
  }

  // surjectivity with equal fibers of size p^{e-1}, for q <= 10^4
  for (auto [p, e] : std::vector<std::pair<long long, int>>{
           {2, 3}, {3, 2}, {3, 3}, {5, 2}, {7, 2}, {11, 2}, {97, 1}, {3, 7}}) {
    Field f = Field::make(p, e);
    std::vector<long long> fiber(p, 0);
    for (Fe a = 0; a < f.q(); ++a) ++fiber[f.trace(a)];
    long long expect = 1;
    for (int i = 0; i < e - 1; ++i) expect *= p;
    for (long long cnt : fiber) REQUIRE(cnt == expect);
  }
}

TEST_CASE("discrete log inverts generator powers") {
  Field f7 = Field::make(7, 1);
  REQUIRE(f7.dlog(2) == 2);  // 3^2 = 9 = 2 mod 7
  REQUIRE(f7.dlog(1) == 0);
  REQUIRE_THROWS_AS(f7.dlog(0), ZeroArgumentError);

  for (auto [p, e] : std::vector<std::pair<long long, int>>{
           {101, 1}, {2, 3}, {3, 4}, {7, 2}, {9973, 1}}) {
    Field f = Field::make(p, e);
    for (long long k = 0; k < (long long)f.q() - 1; ++k)
      REQUIRE(f.dlog(f.exp_of(k)) == k);
  }
}

TEST_CASE("baby-step giant-step agrees with tables") {
  FieldOptions no_tables;
  no_tables.table_cap = 0;
  Field light = Field::make(10007, 1, std::nullopt, no_tables);
  Field full = Field::make(10007, 1);
  REQUIRE(!light.has_tables());
  REQUIRE(light.generator() == full.generator());
  std::mt19937 rng(99);
  std::uniform_int_distribution<Fe> dist(1, 10006);
  for (int it = 0; it < 50; ++it) {
    Fe x = dist(rng);
    REQUIRE(light.dlog(x) == full.dlog(x));
  }
}

TEST_CASE("user-supplied modulus is accepted when irreducible") {
  // X^2 + X + 2 is irreducible over F_3 (no roots)
  Field f = Field::make(3, 2, std::vector<long long>{2, 1, 1});
  REQUIRE(f.q() == 9);
  REQUIRE(f.modulus() == std::vector<long long>{2, 1, 1});
  Fe X = f.encode({0, 1});
  // X^2 = -X - 2 = 2X + 1
  REQUIRE(f.mul(X, X) == f.encode({1, 2}));
}
