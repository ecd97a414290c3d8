#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "charlab/formulas.hpp"
#include "charlab/parse.hpp"
#include "charlab/print.hpp"

using namespace charlab;

namespace {

// Set-builder oracle for the squares predicate: enumerate t and mark t^2.
std::set<long long> squares_oracle(long long q, const Field& f) {
  std::set<long long> s;
  for (Fe t = 0; t < q; ++t) s.insert(f.mul(t, t));
  return s;
}

Formula squares_formula() {
  return parse_source("formula 1: exists t (t^2 - x1 = 0)").formulas.at(1);
}

}  // namespace

TEST_CASE("poly parsing produces the expected term map") {
  PolyExpr p = parse_source("poly 2: x1^2*x2 - 3").polys.at(2);
  REQUIRE(p.arity == 2);
  REQUIRE(p.terms.size() == 2);
  REQUIRE(p.terms.at(ExpVec{2, 1}) == 1);
  REQUIRE(p.terms.at(ExpVec{0, 0}) == -3);
}

TEST_CASE("laurent parsing splits torus blocks") {
  LaurentPoly h =
      parse_source("laurent 1: (1/2) Y1 Z1^-1 + (1/2) Y1^-1 Z1").laurents.at(1);
  REQUIRE(h.n == 1);
  REQUIRE(h.terms.size() == 2);
  REQUIRE(h.terms.at(ExpVec{1, -1}) == Rat(1, 2));
  REQUIRE(h.terms.at(ExpVec{-1, 1}) == Rat(1, 2));
  auto split = split_laurent_monomials(h);
  REQUIRE(split.is_real_on_torus);
  REQUIRE(!split.has_constant_term);
}

TEST_CASE("laurent real-valuedness is decided symbolically") {
  auto defs = parse_source(
      "laurent 1: Y1\n"
      "laurent 2: Y1 Z2 - Y1^-1 Z2^-1\n"
      "laurent 3: (1/2) Y1 Z1^-1 + (1/2) Y1^-1 Z1\n");
  REQUIRE(!split_laurent_monomials(defs.laurents.at(1)).is_real_on_torus);
  REQUIRE(!split_laurent_monomials(defs.laurents.at(2)).is_real_on_torus);
  REQUIRE(split_laurent_monomials(defs.laurents.at(3)).is_real_on_torus);
}

TEST_CASE("real-valued laurents have numerically real values on random torus points") {
  auto defs = parse_source(
      "laurent 1: (1/2) Y1 Z1^-1 + (1/2) Y1^-1 Z1\n"
      "laurent 2: Y1 Y2 Z1 + Y1^-1 Y2^-1 Z1^-1 - 2 Z2 - 2 Z2^-1\n");
  std::mt19937 rng(7);
  std::uniform_int_distribution<long long> num(0, 9999);
  for (auto& [id, h] : defs.laurents) {
    auto split = split_laurent_monomials(h);
    REQUIRE(split.is_real_on_torus);
    for (int it = 0; it < 1000; ++it) {
      std::vector<RationalAngle> pt;
      for (int i = 0; i < 2 * h.n; ++i) pt.emplace_back(num(rng), 10000);
      REQUIRE(std::abs(laurent_eval_angles(h, pt).imag()) < 1e-9);
    }
  }
}

TEST_CASE("eval_formula squares predicate vs the oracle") {
  Field f = Field::make(7, 1);
  Formula sq = squares_formula();
  auto oracle = squares_oracle(7, f);
  REQUIRE(eval_formula(f, sq, {2}));
  REQUIRE(!eval_formula(f, sq, {3}));
  for (Fe x = 0; x < 7; ++x)
    REQUIRE(eval_formula(f, sq, {x}) == (oracle.count(x) > 0));
}

TEST_CASE("eval_formula agrees with set-builder oracles across fields") {
  auto defs = parse_source(
      "formula 1: exists t (t^2 - x1 = 0)\n"
      "formula 2: x1 = 0\n"
      "formula 3: not (x1 = 0) and exists t (t^3 - x1 = 0)\n"
      "formula 4: x1*x2 - 1 = 0 or x1 + x2 = 0\n");
  for (long long q : {7, 11, 25, 27, 49}) {
    long long p = q;
    int e = 1;
    if (q == 25) { p = 5; e = 2; }
    if (q == 27) { p = 3; e = 3; }
    if (q == 49) { p = 7; e = 2; }
    Field f = Field::make(p, e);
    // oracles by independent enumeration
    std::set<long long> sq = squares_oracle(q, f), cb;
    for (Fe t = 0; t < q; ++t) cb.insert(f.mul(t, f.mul(t, t)));
    for (Fe x = 0; x < q; ++x) {
      REQUIRE(eval_formula(f, defs.formulas.at(1), {x}) == (sq.count(x) > 0));
      REQUIRE(eval_formula(f, defs.formulas.at(2), {x}) == (x == 0));
      REQUIRE(eval_formula(f, defs.formulas.at(3), {x}) ==
              (x != 0 && cb.count(x) > 0));
    }
    for (Fe x = 0; x < q; ++x)
      for (Fe y = 0; y < q; ++y)
        REQUIRE(eval_formula(f, defs.formulas.at(4), {x, y}) ==
                (f.mul(x, y) == 1 || f.add(x, y) == 0));
  }
}

TEST_CASE("formula 'x1 = 0' holds at zero") {
  Field f = Field::make(7, 1);
  Formula z = parse_source("formula 1: x1 = 0").formulas.at(1);
  REQUIRE(eval_formula(f, z, {0}));
}

TEST_CASE("predicate evaluation basics") {
  Field f = Field::make(7, 1);
  Definitions defs = parse_source(
      "predicate 1: Psi(x1)*Chi(x1)\n"
      "predicate 2: Psi(x1)\n"
      "predicate 3: ind(exists t (t^2 - x1 = 0))\n");
  EvalContext ctx{f, AdditiveCharacter::standard(),
                  MultiplicativeCharacter::primitive(), &defs};
  // chi(0) = 0 annihilates
  REQUIRE(std::abs(eval_predicate(ctx, defs.predicates.at(1), {0})) < 1e-12);
  auto v = eval_predicate(ctx, defs.predicates.at(2), {3});
  REQUIRE(std::abs(v - RationalAngle(3, 7).to_complex()) < 1e-12);
  REQUIRE(std::abs(eval_predicate(ctx, defs.predicates.at(3), {4}) - 1.0) < 1e-12);
}

TEST_CASE("predicate with kappa and theta references") {
  Field f = Field::make(7, 1);
  Definitions defs = parse_source(
      "kappa 1: P: y^2 - x1; Q: y^4\n"
      "theta 1: params 1; vars 1; block root(z^2 - a1); g: z1; h: 1\n"
      "predicate 1: Psi(kappa1(x1))\n"
      "predicate 2: theta1(x1) + 1/2\n");
  EvalContext ctx{f, AdditiveCharacter::standard(),
                  MultiplicativeCharacter::primitive(), &defs};
  // kappa1(2): roots {3,4}, 3^4 = 4^4 = 4 mod 7 -> Psi(4)
  auto v = eval_predicate(ctx, defs.predicates.at(1), {2});
  REQUIRE(std::abs(v - RationalAngle(4, 7).to_complex()) < 1e-12);
  // theta1(2) = Psi(3) + Psi(4)
  auto t = eval_predicate(ctx, defs.predicates.at(2), {2});
  auto expect = RationalAngle(3, 7).to_complex() + RationalAngle(4, 7).to_complex() +
                std::complex<double>(0.5, 0.0);
  REQUIRE(std::abs(t - expect) < 1e-12);
}

TEST_CASE("syntax errors carry positions") {
  try {
    parse_source("poly 1: x1 +");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    REQUIRE(e.line == 1);
    REQUIRE(e.column >= 12);
  }
  REQUIRE_THROWS_AS(parse_source("poly 1: z9"), SyntaxError);
  REQUIRE_THROWS_AS(parse_source("frobnicate 1: x1"), SyntaxError);
}

TEST_CASE("round trip on the 50-item corpus") {
  std::ifstream in(std::string(CORPUS_PATH));
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();

  Definitions defs = parse_source(text);
  std::size_t n_decls = defs.polys.size() + defs.laurents.size() +
                        defs.formulas.size() + defs.linmaps.size() +
                        defs.multmaps.size() + defs.predicates.size() +
                        defs.thetas.size() + defs.kappas.size() +
                        defs.witnesses.size();
  REQUIRE(n_decls == 50);

  std::string printed = print_definitions(defs);
  Definitions reparsed = parse_source(printed);
  REQUIRE(reparsed == defs);
  // printing is a fixed point
  REQUIRE(print_definitions(reparsed) == printed);
}

TEST_CASE("predicate bound is respected") {
  Field f = Field::make(11, 1);
  Definitions defs = parse_source(
      "theta 1: params 1; vars 1; block root(z^2 - a1); g: z1; h: z1\n"
      "predicate 1: 2*Psi(x1)*Chi(x1) + theta1(x1) - 3\n");
  EvalContext ctx{f, AdditiveCharacter::standard(),
                  MultiplicativeCharacter::primitive(), &defs};
  double bound = predicate_bound(defs.predicates.at(1).root, &defs);
  REQUIRE(bound == Catch::Approx(2.0 + 2.0 + 3.0));
  for (Fe x = 0; x < 11; ++x)
    REQUIRE(std::abs(eval_predicate(ctx, defs.predicates.at(1), {x})) <=
            bound + 1e-12);
}

TEST_CASE("predicate nesting respects the depth bound") {
  // conj(conj(...)) nested past the default bound of 64
  std::string deep = "predicate 1: ";
  for (int i = 0; i < 70; ++i) deep += "conj(";
  deep += "Psi(x1)";
  for (int i = 0; i < 70; ++i) deep += ")";
  REQUIRE_THROWS_AS(parse_source(deep), SyntaxError);
  // a configurable bound admits it
  REQUIRE_NOTHROW(parse_source(deep, 128));
  // ordinary nesting is far below the bound
  REQUIRE_NOTHROW(parse_source("predicate 1: conj(abs(Psi(x1)*(Chi(x1) + 2)))"));
}

TEST_CASE("basic predicates evaluate piecewise and verify their partition") {
  Field f = Field::make(7, 1);
  Definitions defs = parse_source(
      "theta 1: params 1; vars 1; block root(z^2 - a1); g: z1; h: 1\n"
      "theta 2: params 1; vars 1; block root(z - a1); g: 2*z1; h: 1\n"
      "formula 1: exists t (t^2 - x1 = 0)\n"
      "formula 2: not (exists t (t^2 - x1 = 0))\n");
  BasicPredicate bp;
  bp.arity = 1;
  bp.pieces.push_back({defs.formulas.at(1), Rat(1, 2), defs.thetas.at(1),
                       Rat(3), defs.thetas.at(2)});
  bp.pieces.push_back({defs.formulas.at(2), Rat(-1), defs.thetas.at(2),
                       Rat(0), defs.thetas.at(2)});
  REQUIRE(verify_partition(f, bp));

  EvalContext ctx{f, AdditiveCharacter::standard(),
                  MultiplicativeCharacter::primitive(), &defs};
  for (Fe a = 0; a < 7; ++a) {
    auto got = eval_basic_predicate(ctx, bp, {a});
    bool square = eval_formula(f, defs.formulas.at(1), {a});
    std::complex<double> expect;
    if (square) {
      expect = 0.5 * theta_eval(f, defs.thetas.at(1), {a}, ctx.psi, ctx.chi) +
               std::complex<double>(0, 3) *
                   theta_eval(f, defs.thetas.at(2), {a}, ctx.psi, ctx.chi);
    } else {
      expect = -theta_eval(f, defs.thetas.at(2), {a}, ctx.psi, ctx.chi);
    }
    REQUIRE(std::abs(got - expect) < 1e-12);
  }

  // overlapping cells are rejected
  BasicPredicate bad = bp;
  bad.pieces[1].cell = defs.formulas.at(1);
  REQUIRE(!verify_partition(f, bad));
}
