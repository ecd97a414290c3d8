#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "charlab/equidist.hpp"
#include "charlab/parse.hpp"

using namespace charlab;

namespace {

// Brute-force extreme-discrepancy oracle: boxes [a, b) with both endpoints
// drawn from sample coordinates nudged by +-eps, plus the domain bounds;
// captures every open/closed limit configuration up to O(eps).
double oracle_discrepancy(const std::vector<std::vector<double>>& pts, int d) {
  const double eps = 1e-7;
  std::size_t n = pts.size();
  std::vector<std::vector<double>> cand(d);
  for (int i = 0; i < d; ++i) {
    cand[i].push_back(0.0);
    cand[i].push_back(1.0);
    for (auto& p : pts) {
      cand[i].push_back(p[i] - eps);
      cand[i].push_back(p[i]);
      cand[i].push_back(p[i] + eps);
    }
    std::sort(cand[i].begin(), cand[i].end());
  }
  double best = 0.0;
  if (d == 1) {
    for (double a : cand[0])
      for (double b : cand[0]) {
        if (b < a) continue;
        long long cnt = 0;
        for (auto& p : pts) cnt += (p[0] >= a && p[0] < b);
        best = std::max(best, std::abs((double)cnt / n - (b - a)));
      }
  } else {
    for (double a1 : cand[0])
      for (double b1 : cand[0]) {
        if (b1 < a1) continue;
        for (double a2 : cand[1])
          for (double b2 : cand[1]) {
            if (b2 < a2) continue;
            long long cnt = 0;
            for (auto& p : pts)
              cnt += (p[0] >= a1 && p[0] < b1 && p[1] >= a2 && p[1] < b2);
            best = std::max(best,
                            std::abs((double)cnt / n - (b1 - a1) * (b2 - a2)));
          }
      }
  }
  return best;
}

}  // namespace

TEST_CASE("discrepancy d=1 on the reference examples") {
  // {0, 1/2} is the 2-point uniform grid: the sup is 1/2, attained in the
  // limit of a box shrinking onto either point
  {
    REQUIRE(discrepancy_exact_1d({RationalAngle(0, 1), RationalAngle(1, 2)}) ==
            Rat(1, 2));
    TorusSequence X = TorusSequence::from_angles(
        {{RationalAngle(0, 1)}, {RationalAngle(1, 2)}});
    REQUIRE(discrepancy(X) == Catch::Approx(0.5).margin(1e-12));
  }
  // single point at 0: the vanishing box around the point gives 1
  REQUIRE(discrepancy_exact_1d({RationalAngle(0, 1)}) == Rat(1));
  // the uniform grid {k/n} has discrepancy exactly 1/n
  for (int n : {2, 5, 10, 37}) {
    std::vector<RationalAngle> pts;
    for (int k = 0; k < n; ++k) pts.emplace_back(k, n);
    REQUIRE(discrepancy_exact_1d(pts) == Rat(1, n));
  }
}

TEST_CASE("discrepancy agrees with the corner-enumeration oracle, d=1") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 40);
  for (int rep = 0; rep < 30; ++rep) {
    int n = size(rng);
    TorusSequence X;
    X.dim = 1;
    for (int i = 0; i < n; ++i) X.points.push_back({dist(rng)});
    if (rep % 3 == 0 && n > 2) X.points[1] = X.points[0];  // duplicates
    double got = discrepancy(X);
    double expect = oracle_discrepancy(X.points, 1);
    REQUIRE(got == Catch::Approx(expect).margin(1e-5));
  }
}

TEST_CASE("discrepancy agrees with the corner-enumeration oracle, d=2") {
  std::mt19937 rng(22);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 12);
  for (int rep = 0; rep < 12; ++rep) {
    int n = size(rng);
    TorusSequence X;
    X.dim = 2;
    for (int i = 0; i < n; ++i) X.points.push_back({dist(rng), dist(rng)});
    if (rep % 4 == 0 && n > 2) {
      X.points[1][0] = X.points[0][0];  // duplicate x
      X.points[2][1] = X.points[0][1];  // duplicate y
    }
    double got = discrepancy(X);
    double expect = oracle_discrepancy(X.points, 2);
    REQUIRE(got == Catch::Approx(expect).margin(1e-4));
  }
}

TEST_CASE("the d=2 kernel agrees with the oracle beyond one vector block") {
  // large enough that the AVX path runs full blocks plus a scalar tail
  TorusSequence X = TorusSequence::kronecker(
      {std::sqrt(2.0) - 1.0, (std::sqrt(5.0) - 1.0) / 2.0}, 25);
  double got = discrepancy(X);
  double expect = oracle_discrepancy(X.points, 2);
  REQUIRE(got == Catch::Approx(expect).margin(2e-4));
}

TEST_CASE("etk bound basics") {
  // single point at 0, H=1, C=3/2: the signed frequencies h = -1, +1 both
  // contribute |S| = 1, so the bound is (3/2)(1 + 2) = 4.5
  TorusSequence X;
  X.dim = 1;
  X.points = {{0.0}};
  REQUIRE(etk_bound(X, {1, 1.5}) == Catch::Approx(4.5).margin(1e-12));

  // uniform grid: the h-sums with 0 < h < n vanish, so the bound is C/H
  for (int n : {8, 50}) {
    TorusSequence G;
    G.dim = 1;
    for (int k = 0; k < n; ++k) G.points.push_back({(double)k / n});
    REQUIRE(etk_bound(G, {4, 1.5}) == Catch::Approx(1.5 / 4).margin(1e-9));
  }

  // bound is always >= C/H
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  TorusSequence R;
  R.dim = 2;
  for (int i = 0; i < 100; ++i) R.points.push_back({dist(rng), dist(rng)});
  REQUIRE(etk_bound(R, {16, 0.0}) >= etk_default_constant(2) / 16 - 1e-12);

  // the d=2 fast path matches the generic enumeration
  TorusSequence S;
  S.dim = 2;
  for (int i = 0; i < 40; ++i) S.points.push_back({dist(rng), dist(rng)});
  double fast = etk_bound(S, {6, 0.0});
  double slow = 0.0;
  {
    const double tau = 2.0 * std::numbers::pi;
    double sum = 0.0;
    for (long long h1 = -6; h1 <= 6; ++h1)
      for (long long h2 = -6; h2 <= 6; ++h2) {
        if (h1 == 0 && h2 == 0) continue;
        std::complex<double> s(0, 0);
        for (auto& p : S.points)
          s += std::polar(1.0, tau * (h1 * p[0] + h2 * p[1]));
        sum += std::abs(s) /
               (40.0 * std::max(1ll, std::llabs(h1)) * std::max(1ll, std::llabs(h2)));
      }
    slow = etk_default_constant(2) * (1.0 / 6 + sum);
  }
  REQUIRE(fast == Catch::Approx(slow).margin(1e-9));
}

TEST_CASE("etk bound dominates exact discrepancy for Kronecker sequences") {
  const double sqrt2m1 = std::sqrt(2.0) - 1.0;
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int n : {100, 1000}) {
    for (long long H : {4ll, 16ll, 64ll}) {
      TorusSequence X1 = TorusSequence::kronecker({sqrt2m1}, n);
      REQUIRE(discrepancy(X1) <= etk_bound(X1, {H, 0.0}) + 1e-12);
      TorusSequence X2 = TorusSequence::kronecker({sqrt2m1, golden}, n);
      REQUIRE(discrepancy(X2) <= etk_bound(X2, {H, 0.0}) + 1e-12);
    }
  }
}

TEST_CASE("exponent search on the reference examples") {
  // gamma = 1/97, box (0, 1/10), R=3, f=2, K=10 -> l=2
  {
    TorusBox box;
    box.sides = {{Rat(0), Rat(1, 10)}};
    auto r = exponent_search({RationalAngle(1, 97)}, box, 3, 2, 10, 1000000);
    REQUIRE(r.found);
    REQUIRE(r.l == 2);
    REQUIRE(r.achieved[0] == RationalAngle(2, 97));
    REQUIRE(r.orders[0] == 97);
  }
  // gamma = 1/2: alpha = (2) violates independence
  {
    TorusBox box;
    box.sides = {{Rat(1, 10), Rat(2, 10)}};
    try {
      exponent_search({RationalAngle(1, 2)}, box, 1, 1, 1, 100);
      FAIL("expected IndependencePrecheckFailed");
    } catch (const IndependencePrecheckFailedError& e) {
      REQUIRE(e.alpha == std::vector<long long>{2});
    }
  }
  // full-torus box: l = 1 immediately; the tuple carries the exact relation
  // 3 g1 - g2 = 0, so the precheck height must sit below 3 for this pair
  {
    TorusBox box;
    box.sides = {{Rat(0), Rat(1)}, {Rat(0), Rat(1)}};
    auto r = exponent_search({RationalAngle(1, 101), RationalAngle(3, 101)}, box,
                             1, 1, 1, 100, 2);
    REQUIRE(r.found);
    REQUIRE(r.l == 1);
    REQUIRE_THROWS_AS(exponent_search({RationalAngle(1, 101), RationalAngle(3, 101)},
                                      box, 1, 1, 1, 100, 8),
                      IndependencePrecheckFailedError);
  }
  // exhausted search carries a horizon diagnostic: no multiple of 1/13
  // lands in [1/30, 1/15)
  {
    TorusBox box;
    box.sides = {{Rat(1, 30), Rat(1, 15)}};
    auto r = exponent_search({RationalAngle(1, 13)}, box, 1, 1, 1, 1000);
    REQUIRE(!r.found);
    REQUIRE(r.predicted_horizon > 0);
  }
}

TEST_CASE("witness search on a small range of the sqrt-2 spec") {
  WitnessSpec spec =
      parse_source("witness 1: minpoly x1^2 - 2; gen x1 -> 1/3; basis 1 -> 0; "
                   "basis x1 -> 1/4; tol 1/20; rou 2 1 (-1) -> 1/2; orderfloor 20")
          .witnesses.at(1);
  auto records = witness_search(spec, 3, 20000);
  REQUIRE(records.size() >= 3);
  for (auto& rec : records) {
    REQUIRE(rec.verified);
    // p = +-1 mod 8 so that 2 is a quadratic residue
    REQUIRE((rec.p % 8 == 1 || rec.p % 8 == 7));
    // independent re-check with full tables
    Field f = Field::make(rec.p, 1);
    REQUIRE(f.mul((Fe)rec.root, (Fe)rec.root) == f.from_int(2));
    MultiplicativeCharacter chi{rec.mult_exp};
    CharacterValue v = chi_eval(f, chi, (Fe)rec.root);
    REQUIRE(!v.zero);
    double angle_dist = std::abs(v.angle.value() - 1.0 / 3.0);
    angle_dist = std::min(angle_dist, 1.0 - angle_dist);
    REQUIRE(angle_dist <= 0.05 + 1e-12);
    // chi(-1) = -1 exactly
    CharacterValue m1 = chi_eval(f, chi, f.from_int(-1));
    REQUIRE(m1.angle == RationalAngle(1, 2));
    REQUIRE(character_order(f, chi) >= 20);
    // additive target on the basis element 1
    AdditiveCharacter psi{(Fe)rec.add_twist};
    double a0 = psi_eval(f, psi, f.from_int(1)).value();
    REQUIRE(std::min(a0, 1.0 - a0) <= 0.05 + 1e-12);
  }
}

TEST_CASE("witness search reports empty candidate ranges") {
  WitnessSpec spec =
      parse_source("witness 1: minpoly x1^2 + 1; tol 1; orderfloor 1")
          .witnesses.at(1);
  // X^2 + 1 is irreducible mod 3
  REQUIRE_THROWS_AS(witness_search(spec, 3, 3), NoPrimesFoundError);
}

TEST_CASE("reducible minimal polynomials are rejected") {
  WitnessSpec spec =
      parse_source("witness 1: minpoly x1^2 - 4; tol 1; orderfloor 1")
          .witnesses.at(1);
  REQUIRE_THROWS_AS(witness_search(spec, 3, 100), Error);
}

TEST_CASE("grid approximation for d >= 3") {
  // a single point at the origin: the complement of its cell approaches
  // volume 1 while holding no points
  TorusSequence X;
  X.dim = 3;
  X.points = {{0.0, 0.0, 0.0}};
  double v = discrepancy(X, 4);
  REQUIRE(v >= 1.0 - 1.0 / 64 - 1e-12);
  REQUIRE(v <= 1.0);

  // grid-anchored boxes only sample the true sup from below
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  TorusSequence R;
  R.dim = 3;
  for (int i = 0; i < 200; ++i)
    R.points.push_back({dist(rng), dist(rng), dist(rng)});
  double coarse = discrepancy(R, 2);
  double finer = discrepancy(R, 6);
  REQUIRE(coarse >= 0.0);
  REQUIRE(finer >= 0.0);
  REQUIRE(finer <= 1.0);
}

TEST_CASE("vacuous witness targets accept the first split prime") {
  // tolerance 1 makes every angular target vacuous; R = 1 leaves the
  // exponent class unconstrained
  WitnessSpec spec =
      parse_source("witness 1: minpoly x1^2 - 2; gen x1 -> 0; tol 1; orderfloor 1")
          .witnesses.at(1);
  auto records = witness_search(spec, 3, 100, 1);
  REQUIRE(records.size() == 1);
  // 2 is a quadratic residue mod 7 (3^2 = 2), the first such prime
  REQUIRE(records[0].p == 7);
  REQUIRE(records[0].mult_exp == 1);
  REQUIRE(records[0].verified);
}
