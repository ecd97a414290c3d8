#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "charlab/parse.hpp"
#include "charlab/theta.hpp"

using namespace charlab;

namespace {

const double kTau = 6.283185307179586476925;

// Square-root fiber spec: roots of z^2 = a, summed with Psi(z).
ThetaSpec sqrt_spec() {
  return parse_source("theta 1: params 1; vars 1; block root(z^2 - a1); g: z1; h: 1")
      .thetas.at(1);
}

// Independent root-scan oracle for theta over a single root condition.
std::complex<double> sqrt_theta_oracle(const Field& f, Fe a) {
  std::complex<double> acc(0, 0);
  for (Fe z = 0; z < f.q(); ++z)
    if (f.mul(z, z) == a)
      acc += std::polar(1.0, kTau * (double)f.trace(z) / (double)f.p());
  return acc;
}

}  // namespace

TEST_CASE("theta_eval on the square-root fiber over F_7") {
  Field f = Field::make(7, 1);
  ThetaSpec spec = sqrt_spec();

  // a = 2: roots {3, 4}; sum = e^{2 pi i 3/7} + e^{2 pi i 4/7} = 2 cos(6 pi / 7)
  auto v = theta_eval(f, spec, {2}, AdditiveCharacter::standard(),
                      MultiplicativeCharacter::primitive());
  REQUIRE(std::abs(v - sqrt_theta_oracle(f, 2)) < 1e-12);
  REQUIRE(v.real() == Catch::Approx(2 * std::cos(6 * std::numbers::pi / 7)).margin(1e-9));
  REQUIRE(std::abs(v.imag()) < 1e-12);

  // a = 3 is a non-residue: empty fiber
  REQUIRE(std::abs(theta_eval(f, spec, {3}, AdditiveCharacter::standard(),
                              MultiplicativeCharacter::primitive())) < 1e-12);

  // identity fiber z = a gives Psi(a)
  ThetaSpec ident =
      parse_source("theta 1: params 1; vars 1; block root(z - a1); g: z1; h: 1")
          .thetas.at(1);
  auto w = theta_eval(f, ident, {5}, AdditiveCharacter::standard(),
                      MultiplicativeCharacter::primitive());
  REQUIRE(std::abs(w - RationalAngle(5, 7).to_complex()) < 1e-12);
}

TEST_CASE("theta fiber bound") {
  Field f = Field::make(7, 1);
  ThetaSpec spec = sqrt_spec();
  REQUIRE(spec.derived_bound() == 2);
  for (Fe a = 0; a < 7; ++a)
    REQUIRE((long long)theta_fiber(f, spec, {a}).size() <= spec.derived_bound());
  // a degenerate condition 0 = 0 is rejected
  ThetaSpec degenerate =
      parse_source("theta 1: params 1; vars 1; block root(a1*z - a1*z); g: z1; h: 1")
          .thetas.at(1);
  REQUIRE_THROWS_AS(theta_fiber(f, degenerate, {3}), FiberBoundExceededError);
}

TEST_CASE("chi_sym counts multiplicity") {
  Field f = Field::make(7, 1);
  MultiplicativeCharacter quad = MultiplicativeCharacter::quadratic(f);

  // x^2 - 2: roots {3, 4}; chi(3) = -1, chi(4) = +1
  auto v = chi_sym(f, 2, {0, f.from_int(-2)}, quad);
  REQUIRE(std::abs(v) < 1e-12);

  // x - a: single root a
  for (Fe a = 1; a < 7; ++a) {
    auto w = chi_sym(f, 1, {f.neg(a)}, quad);
    REQUIRE(std::abs(w - chi_complex(f, quad, a)) < 1e-12);
  }

  // (x - a)^2 = x^2 - 2a x + a^2: double root
  Fe a = 3;
  auto d = chi_sym(f, 2, {f.neg(f.add(a, a)), f.mul(a, a)}, quad);
  REQUIRE(std::abs(d - 2.0 * chi_complex(f, quad, a)) < 1e-12);
}

TEST_CASE("theta product and conjugate satisfy the algebra identities") {
  ThetaSpec s = sqrt_spec();
  for (long long q : {7, 11, 13}) {
    Field f = Field::make(q, 1);
    AdditiveCharacter psi = AdditiveCharacter::standard();
    MultiplicativeCharacter chi = MultiplicativeCharacter::primitive();
    ThetaSpec prod = theta_combine(ThetaCombineKind::Product, s, &s);
    ThetaSpec conj = theta_combine(ThetaCombineKind::Conjugate, s);
    for (Fe a = 0; a < q; ++a) {
      auto base = theta_eval(f, s, {a}, psi, chi);
      REQUIRE(std::abs(theta_eval(f, prod, {a}, psi, chi) - base * base) < 1e-9);
      REQUIRE(std::abs(theta_eval(f, conj, {a}, psi, chi) - std::conj(base)) < 1e-9);
    }
  }
  // the square-root fiber is symmetric, so the value is real and conjugation
  // fixes it
  Field f7 = Field::make(7, 1);
  auto v = theta_eval(f7, s, {2}, AdditiveCharacter::standard(),
                      MultiplicativeCharacter::primitive());
  auto c = theta_eval(f7, theta_combine(ThetaCombineKind::Conjugate, s), {2},
                      AdditiveCharacter::standard(),
                      MultiplicativeCharacter::primitive());
  REQUIRE(std::abs(v - c) < 1e-9);
}

TEST_CASE("theta sum with valid padding") {
  Definitions defs = parse_source(
      "theta 1: params 1; vars 1; block root(z^2 - a1); g: z1; h: z1\n"
      "theta 2: params 1; vars 1; block root(z^3 - a1); g: 2*z1; h: z1^2\n");
  const ThetaSpec& s1 = defs.thetas.at(1);
  const ThetaSpec& s2 = defs.thetas.at(2);

  ThetaPadding pad;
  pad.q1 = {Rat(2)};          // h1(q1) = 2, so s1 = 1/2
  pad.q2 = {Rat(3)};          // h2(q2) = 9, so s2 = 1/9
  pad.r1 = Rat(-2);           // g1(q1) = 2
  pad.r2 = Rat(-6);           // g2(q2) = 6
  pad.s1 = Rat(1, 2);
  pad.s2 = Rat(1, 9);
  ThetaSpec sum = theta_combine(ThetaCombineKind::Sum, s1, &s2, &pad);

  Field f = Field::make(11, 1);
  AdditiveCharacter psi = AdditiveCharacter::standard();
  MultiplicativeCharacter chi{2};
  for (Fe a = 0; a < 11; ++a) {
    auto lhs = theta_eval(f, sum, {a}, psi, chi);
    auto rhs = theta_eval(f, s1, {a}, psi, chi) + theta_eval(f, s2, {a}, psi, chi);
    REQUIRE(std::abs(lhs - rhs) < 1e-9);
  }

  ThetaPadding bad = pad;
  bad.s1 = Rat(1, 3);
  REQUIRE_THROWS_AS(theta_combine(ThetaCombineKind::Sum, s1, &s2, &bad),
                    InvalidPaddingError);
  ThetaPadding collide = pad;
  collide.q2 = {Rat(2)};
  collide.r2 = Rat(-4);
  collide.s2 = Rat(1, 4);
  // s2 becomes 1/4 != 1/2: still valid
  REQUIRE_NOTHROW(theta_combine(ThetaCombineKind::Sum, s1, &s2, &collide));
}

TEST_CASE("kappa_eval on the square-root resolvent") {
  Field f = Field::make(7, 1);
  Definitions defs = parse_source(
      "kappa 1: P: y^2 - x1; Q: y^4\n"
      "kappa 2: P: y^2 - x1; Q: y\n");
  // both roots 3, 4 of y^2 = 2 give y^4 = 4
  REQUIRE(kappa_eval(f, defs.kappas.at(1), {2}) == 4);
  // no root at a = 3
  REQUIRE(kappa_eval(f, defs.kappas.at(1), {3}) == 0);
  // differing values 3 != 4
  REQUIRE(kappa_eval(f, defs.kappas.at(2), {2}) == 0);
}

TEST_CASE("kappa is invariant under adding multiples of P") {
  // Q and Q + c*P agree on the roots of P
  Definitions defs = parse_source(
      "kappa 1: P: y^2 - x1; Q: y^3 + x1\n"
      "kappa 2: P: y^2 - x1; Q: y^3 + x1 + 2*(y^2 - x1)\n"
      "kappa 3: P: y^2 - x1; Q: y^3 + x1 + (y + 3)*(y^2 - x1)\n");
  for (long long q : {7, 11, 13}) {
    Field f = Field::make(q, 1);
    for (Fe a = 0; a < q; ++a) {
      Fe base = kappa_eval(f, defs.kappas.at(1), {a});
      REQUIRE(kappa_eval(f, defs.kappas.at(2), {a}) == base);
      REQUIRE(kappa_eval(f, defs.kappas.at(3), {a}) == base);
    }
  }
}

TEST_CASE("theta algebra on random spec pairs") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> deg(1, 3), coef(-3, 3), hexp(-2, 2);
  auto random_spec = [&](int params) {
    ThetaSpec s;
    s.param_arity = params;
    s.fiber_arity = 1;
    ThetaSpec::Block blk;
    ThetaSpec::Slot slot;
    slot.is_const = false;
    PolyExpr root;
    root.arity = params + 1;
    int d = deg(rng) + 1;
    ExpVec zd(params + 1, 0);
    zd[params] = d;
    root.add_term(zd, 1);
    for (int k = 0; k < d; ++k) {
      int c = coef(rng);
      if (c == 0) continue;
      ExpVec e(params + 1, 0);
      e[params] = k;
      e[rng() % params] = 1;
      root.add_term(e, c);
    }
    ExpVec konst(params + 1, 0);
    root.add_term(konst, coef(rng));
    slot.root = root;
    blk.slots.push_back(slot);
    s.blocks.push_back(blk);
    s.g = {coef(rng)};
    int he = hexp(rng);
    s.h = {he == 0 ? 1 : he};
    return s;
  };

  for (int it = 0; it < 40; ++it) {
    ThetaSpec s1 = random_spec(1), s2 = random_spec(1);
    ThetaSpec prod = theta_combine(ThetaCombineKind::Product, s1, &s2);
    ThetaSpec conj1 = theta_combine(ThetaCombineKind::Conjugate, s1);
    for (long long q : {7, 13}) {
      Field f = Field::make(q, 1);
      AdditiveCharacter psi = AdditiveCharacter::standard();
      MultiplicativeCharacter chi{1};
      for (Fe a = 0; a < q; ++a) {
        auto v1 = theta_eval(f, s1, {a}, psi, chi);
        auto v2 = theta_eval(f, s2, {a}, psi, chi);
        REQUIRE(std::abs(theta_eval(f, prod, {a}, psi, chi) - v1 * v2) < 1e-9);
        REQUIRE(std::abs(theta_eval(f, conj1, {a}, psi, chi) - std::conj(v1)) <
                1e-9);
        REQUIRE(std::abs(v1) <= (double)s1.derived_bound() + 1e-9);
      }
    }
  }
}
