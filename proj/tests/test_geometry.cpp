#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "charlab/geometry.hpp"
#include "charlab/parse.hpp"

using namespace charlab;

namespace {

AffineVariety curve_from(const std::string& src, int ambient) {
  Definitions defs = parse_source(src);
  AffineVariety V;
  V.ambient_dim = ambient;
  for (auto& [id, p] : defs.polys) {
    PolyExpr eq = p;
    eq.arity = ambient;
    std::map<ExpVec, long long> padded;
    for (auto& [e, c] : p.terms) {
      ExpVec v(e);
      v.resize(ambient, 0);
      padded[v] = c;
    }
    eq.terms = padded;
    V.equations.push_back(eq);
  }
  return V;
}

// Independent oracle: exhaustive scan with its own arithmetic for
// y^2 = x^3 + x over a prime field.
std::set<std::pair<long long, long long>> elliptic_oracle(long long p) {
  std::set<std::pair<long long, long long>> pts;
  for (long long x = 0; x < p; ++x)
    for (long long y = 0; y < p; ++y)
      if ((y * y) % p == ((x * x % p) * x + x) % p) pts.insert({x, y});
  return pts;
}

}  // namespace

TEST_CASE("point enumeration on y^2 = x^3 + x over F_5") {
  AffineVariety V = curve_from("poly 1: x2^2 - x1^3 - x1", 2);
  Field f = Field::make(5, 1);
  EnumerationResult r = enumerate_points(V, f);
  auto oracle = elliptic_oracle(5);
  REQUIRE(r.all.points.size() == 3);
  REQUIRE(r.all.points.size() == oracle.size());
  for (auto& pt : r.all.points)
    REQUIRE(oracle.count({pt[0], pt[1]}) == 1);
  // all three points have a zero coordinate: {(0,0),(2,0),(3,0)}
  REQUIRE(r.nonzero.points.empty());
  REQUIRE(r.is_zero_degenerate);
}

TEST_CASE("point enumeration against the oracle across primes") {
  AffineVariety V = curve_from("poly 1: x2^2 - x1^3 - x1", 2);
  for (long long p : {5, 7, 11, 13, 17}) {
    Field f = Field::make(p, 1);
    EnumerationResult r = enumerate_points(V, f);
    auto oracle = elliptic_oracle(p);
    REQUIRE(r.all.points.size() == oracle.size());
  }
}

TEST_CASE("the inversion graph lies in C-prime") {
  AffineVariety V = curve_from("poly 1: x1*x2 - 1", 2);
  Field f = Field::make(7, 1);
  EnumerationResult r = enumerate_points(V, f);
  REQUIRE(r.all.points.size() == 6);
  REQUIRE(r.nonzero.points.size() == 6);
  REQUIRE(!r.is_zero_degenerate);
}

TEST_CASE("a coordinate hyperplane is zero-degenerate") {
  AffineVariety V = curve_from("poly 1: x1", 1);
  Field f = Field::make(7, 1);
  EnumerationResult r = enumerate_points(V, f);
  REQUIRE(r.all.points.size() == 1);
  REQUIRE(r.is_zero_degenerate);
}

TEST_CASE("C-prime equals C minus the zero-coordinate points") {
  AffineVariety V = curve_from("poly 1: x2^2 - x1^3 - x1", 2);
  Field f = Field::make(13, 1);
  EnumerationResult r = enumerate_points(V, f);
  std::set<std::vector<Fe>> expected;
  for (auto& pt : r.all.points)
    if (pt[0] != 0 && pt[1] != 0) expected.insert(pt);
  REQUIRE(std::set<std::vector<Fe>>(r.nonzero.points.begin(),
                                    r.nonzero.points.end()) == expected);
}

TEST_CASE("budget enforcement") {
  AffineVariety V = AffineVariety::affine_space(3);
  Field f = Field::make(101, 1);
  REQUIRE_THROWS_AS(enumerate_points(V, f, {}, 1000), BudgetExceededError);
}

TEST_CASE("hyperplane containment witnesses") {
  // points of x1 + x2 = 3 over F_7
  AffineVariety V = curve_from("poly 1: x1 + x2 - 3", 2);
  Field f = Field::make(7, 1);
  EnumerationResult r = enumerate_points(V, f);
  auto w = containment_search(r.all, 1, ContainmentMode::Hyperplane);
  REQUIRE(w.has_value());
  // (1,1) -> 3 or the negated pair
  bool canonical = (w->coeffs == std::vector<long long>{1, 1} && w->value == 3) ||
                   (w->coeffs == std::vector<long long>{-1, -1} &&
                    w->value == f.from_int(-3));
  REQUIRE(canonical);
  // every point satisfies the witness
  for (auto& pt : r.all.points) {
    Fe acc = 0;
    for (int i = 0; i < 2; ++i)
      acc = f.add(acc, f.mul(f.from_int(w->coeffs[i]), pt[i]));
    REQUIRE(acc == w->value);
  }
}

TEST_CASE("coset containment witnesses through discrete logs") {
  AffineVariety V = curve_from("poly 1: x1*x2 - 1", 2);
  Field f = Field::make(7, 1);
  EnumerationResult r = enumerate_points(V, f);
  auto w = containment_search(r.nonzero, 1, ContainmentMode::Coset);
  REQUIRE(w.has_value());
  // x1 * x2 = 1 (or its inverse form)
  for (auto& pt : r.nonzero.points) {
    Fe acc = 1;
    for (int i = 0; i < 2; ++i) acc = f.mul(acc, f.pow(pt[i], w->coeffs[i]));
    REQUIRE(acc == w->value);
  }
}

TEST_CASE("the full plane has no hyperplane witness") {
  AffineVariety V = AffineVariety::affine_space(2);
  Field f = Field::make(7, 1);
  EnumerationResult r = enumerate_points(V, f);
  REQUIRE(!containment_search(r.all, 2, ContainmentMode::Hyperplane).has_value());
}

TEST_CASE("containment search finds known height witnesses exhaustively") {
  // points on 2 x1 - x2 = 4 over F_11: a height-2 object
  AffineVariety V = curve_from("poly 1: 2*x1 - x2 - 4", 2);
  Field f = Field::make(11, 1);
  EnumerationResult r = enumerate_points(V, f);
  REQUIRE(!containment_search(r.all, 1, ContainmentMode::Hyperplane).has_value());
  auto w = containment_search(r.all, 2, ContainmentMode::Hyperplane);
  REQUIRE(w.has_value());
  for (auto& pt : r.all.points) {
    Fe acc = 0;
    for (int i = 0; i < 2; ++i)
      acc = f.add(acc, f.mul(f.from_int(w->coeffs[i]), pt[i]));
    REQUIRE(acc == w->value);
  }
}

TEST_CASE("lang-weil deviations") {
  AffineVariety E = curve_from("poly 1: x2^2 - x1^3 - x1", 2);
  Field f5 = Field::make(5, 1);
  LangWeilReport r5 = lang_weil_check(E, f5);
  REQUIRE(r5.count == 3);
  REQUIRE(r5.deviation == Catch::Approx(2.0 / std::sqrt(5.0)).margin(1e-12));

  AffineVariety L = curve_from("poly 1: x2 - x1", 2);
  Field f7 = Field::make(7, 1);
  LangWeilReport r7 = lang_weil_check(L, f7);
  REQUIRE(r7.count == 7);
  REQUIRE(r7.deviation == 0.0);

  Field f13 = Field::make(13, 1);
  LangWeilReport r13 = lang_weil_check(E, f13);
  REQUIRE(r13.count == elliptic_oracle(13).size());
  REQUIRE(r13.deviation <= 2.0);  // Hasse
}
