#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <vector>

#include "charlab/charsums.hpp"
#include "charlab/formulas.hpp"

namespace charlab {

// --- counting and (d, mu, C) fitting against |phi| ~ mu q^d -------------------

struct SizeEstimate {
  int d = 0;
  Rat mu{0, 1};
  double mu_raw = 0.0;  // the unsnapped median ratio
  double C = 0.0;       // max residual
  std::vector<double> residuals;        // |count - mu q^d| / q^{d-1/2}
  std::vector<std::uint64_t> counts;
  std::vector<long long> primes;
};

namespace detail {

// Smallest-denominator rational within tol of x (denominator <= max_den);
// falls back to the best approximation when nothing qualifies.
inline Rat snap_to_rational(double x, long long max_den, double tol) {
  Rat best(0, 1);
  double best_err = 1e300;
  for (long long den = 1; den <= max_den; ++den) {
    long long num = (long long)std::llround(x * (double)den);
    double err = std::abs(x - (double)num / (double)den);
    if (err <= tol) return Rat(num, den);
    if (err < best_err - 1e-15) {
      best_err = err;
      best = Rat(num, den);
    }
  }
  return best;
}

}  // namespace detail

// Fit dimension and multiplicity from per-prime counts. d is the rounded
// median log-slope over the largest half of the primes; slopes spreading by
// more than 0.4 signal that the family straddles partition cells.
// The fitting stage over already-collected counts; exposed separately so
// callers can flush partial counts before fitting.
inline SizeEstimate fit_size_estimate(std::vector<long long> primes,
                                      std::vector<std::uint64_t> counts);

inline SizeEstimate count_and_fit(const Formula& phi,
                                  const std::vector<long long>& primes,
                                  std::uint64_t budget = 100000000ull,
                                  const EvalOptions& opt = {},
                                  const std::vector<long long>& int_params = {}) {
  std::vector<std::uint64_t> counts;
  for (long long p : primes) {
    Field f = Field::make(p, 1);
    std::vector<Fe> params;
    for (long long v : int_params) params.push_back(f.from_int(v));
    counts.push_back(formula_points(f, phi, budget, opt, params).size());
  }
  return fit_size_estimate(primes, std::move(counts));
}

inline SizeEstimate fit_size_estimate(std::vector<long long> primes,
                                      std::vector<std::uint64_t> counts) {
  if (primes.size() < 4) throw Error("count_and_fit needs at least 4 primes");
  SizeEstimate est;
  est.primes = std::move(primes);
  est.counts = std::move(counts);
  bool all_zero = true;
  for (auto c : est.counts) all_zero &= c == 0;
  if (all_zero) return est;  // the degenerate (0, 0, 0) estimate

  // slopes over the largest half
  std::size_t n = est.primes.size();
  std::size_t half = n / 2;
  std::vector<double> slopes;
  for (std::size_t i = half; i < n; ++i) {
    if (est.counts[i] == 0)
      throw InconsistentDimensionError(1e300);
    slopes.push_back(std::log((double)est.counts[i]) /
                     std::log((double)est.primes[i]));
  }
  std::vector<double> sorted = slopes;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() - sorted.front() > 0.4)
    throw InconsistentDimensionError(sorted.back() - sorted.front());
  double median_slope = sorted[sorted.size() / 2];
  est.d = (int)std::lround(median_slope);

  // multiplicity: median of count / q^d, snapped to a small rational
  std::vector<double> ratios;
  for (std::size_t i = 0; i < n; ++i)
    ratios.push_back((double)est.counts[i] / std::pow((double)est.primes[i], est.d));
  std::vector<double> rs = ratios;
  std::sort(rs.begin(), rs.end());
  est.mu_raw = rs[rs.size() / 2];
  double tol = 1.0 / std::sqrt((double)est.primes[n / 2]);
  est.mu = detail::snap_to_rational(est.mu_raw, 64, tol);

  for (std::size_t i = 0; i < n; ++i) {
    double expect = est.mu.to_double() * std::pow((double)est.primes[i], est.d);
    double denom = std::pow((double)est.primes[i], est.d - 0.5);
    est.residuals.push_back(std::abs((double)est.counts[i] - expect) / denom);
  }
  est.C = *std::max_element(est.residuals.begin(), est.residuals.end());
  return est;
}

// --- definable integration (per-prime averages of a predicate) -----------------

struct IntegralReport {
  struct Row {
    std::uint64_t q = 0;
    std::complex<double> value{0.0, 0.0};
    std::uint64_t set_size = 0;
  };
  std::vector<Row> values;
  double tail_max = 0.0;  // max |f_q| over the largest half of the primes
  double slope = 0.0;     // OLS slope of log |f_q| against log q
};

inline std::complex<double> average_over_set(const EvalContext& ctx,
                                             const PredicateExpr& P,
                                             const std::vector<std::vector<Fe>>& pts) {
  if (pts.empty()) return {0.0, 0.0};
  std::complex<double> acc(0.0, 0.0);
  for (auto& x : pts) acc += eval_predicate(ctx, P, x);
  return acc / (double)pts.size();
}

inline IntegralReport::Row integrate_one(const PredicateExpr& P, const Formula& B,
                                         const Definitions& defs, const Field& f,
                                         PsiRule psi_rule, ChiRule chi_rule,
                                         std::uint64_t budget = 100000000ull,
                                         const std::vector<long long>& int_params = {}) {
  EvalContext ctx{f, psi_rule.resolve(f), chi_rule.resolve(f), &defs};
  std::vector<Fe> params;
  for (long long v : int_params) params.push_back(f.from_int(v));
  auto pts = formula_points(f, B, budget, ctx.options, params);
  IntegralReport::Row row;
  row.q = f.q();
  row.set_size = pts.size();
  row.value = average_over_set(ctx, P, pts);
  return row;
}

// Tail statistics over collected per-prime rows.
inline IntegralReport finalize_integral_report(std::vector<IntegralReport::Row> rows);

inline IntegralReport integrate_predicate(const PredicateExpr& P, const Formula& B,
                                          const Definitions& defs,
                                          const std::vector<long long>& primes,
                                          PsiRule psi_rule, ChiRule chi_rule,
                                          std::uint64_t budget = 100000000ull,
                                          const std::vector<long long>& int_params = {}) {
  std::vector<IntegralReport::Row> rows;
  for (long long p : primes) {
    Field f = Field::make(p, 1);
    rows.push_back(integrate_one(P, B, defs, f, psi_rule, chi_rule, budget,
                                 int_params));
  }
  return finalize_integral_report(std::move(rows));
}

inline IntegralReport finalize_integral_report(std::vector<IntegralReport::Row> rows) {
  IntegralReport rep;
  rep.values = std::move(rows);
  std::size_t n = rep.values.size();
  for (std::size_t i = n / 2; i < n; ++i)
    rep.tail_max = std::max(rep.tail_max, std::abs(rep.values[i].value));
  // OLS of log|f_q| vs log q over nonzero values
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (auto& row : rep.values) {
    double a = std::abs(row.value);
    if (a < 1e-14) continue;
    double x = std::log((double)row.q), y = std::log(a);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++m;
  }
  if (m >= 2) rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return rep;
}

// --- Fubini -------------------------------------------------------------------

struct FubiniReport {
  std::complex<double> lhs{0.0, 0.0};
  std::complex<double> rhs{0.0, 0.0};
  double delta = 0.0;
  bool hypothesis_ok = false;  // all nonempty fibers share one cardinality
  std::uint64_t fiber_count = 0;
  std::uint64_t fiber_size = 0;
};

// Direct average over B vs the iterated average: outer over the projection
// to the last coordinates, inner over fibers. split = |x1| is the number of
// leading coordinates integrated in the inner step.
inline FubiniReport fubini_check(const PredicateExpr& P, const Formula& B, int split,
                                 const Definitions& defs, const Field& f,
                                 AdditiveCharacter psi, MultiplicativeCharacter chi,
                                 std::uint64_t budget = 100000000ull,
                                 const std::vector<Fe>& params = {}) {
  int free_arity = B.arity - (int)params.size();
  if (split < 1 || split >= free_arity)
    throw ArityMismatchError("split must leave both variable blocks nonempty");
  EvalContext ctx{f, psi, chi, &defs};
  auto pts = formula_points(f, B, budget, ctx.options, params);
  FubiniReport rep;
  if (pts.empty()) return rep;

  rep.lhs = average_over_set(ctx, P, pts);

  // group by the projection to the trailing coordinates
  std::map<std::vector<Fe>, std::vector<std::vector<Fe>>> fibers;
  for (auto& x : pts) {
    std::vector<Fe> tail(x.begin() + split, x.end());
    fibers[tail].push_back(x);
  }
  rep.fiber_count = fibers.size();
  rep.fiber_size = fibers.begin()->second.size();
  rep.hypothesis_ok = true;
  for (auto& [tail, fiber] : fibers)
    if (fiber.size() != rep.fiber_size) rep.hypothesis_ok = false;

  std::complex<double> outer(0.0, 0.0);
  for (auto& [tail, fiber] : fibers) outer += average_over_set(ctx, P, fiber);
  rep.rhs = outer / (double)fibers.size();
  rep.delta = std::abs(rep.lhs - rep.rhs);
  return rep;
}

// --- case decomposition for small character order -------------------------------

struct DecompositionCell {
  std::vector<CharacterValue> chi_values;  // one value per Chi occurrence
  std::vector<std::vector<Fe>> points;
  // parametric ring formula psi(x, u): the cell is { x in B : psi(x, a) }
  // for the recorded representative a (one parameter slot per occurrence)
  Formula ring_formula;
  std::vector<Fe> representatives;
  bool set_equal = false;  // enumerated cell == formula-defined cell
};

struct CaseDecomposition {
  long long chi_order = 1;
  std::vector<DecompositionCell> cells;
  std::complex<double> reassembled_average{0.0, 0.0};
  std::complex<double> direct_average{0.0, 0.0};
  double delta_vs_direct = 0.0;
};

// The ring formula for { x : chi(h(x)) = chi(a) }: h(x)/a is an r-th power,
// written with the representative as a parameter slot u to keep coefficients
// integral: exists t (u * t^r - h(x) = 0). The zero value gives h(x) = 0.
inline Formula power_residue_formula(const FieldTerm& h, long long r,
                                     bool zero_value, int point_arity,
                                     int param_slot) {
  if (!h.atoms.empty())
    throw Error("case decomposition requires plain polynomial chi arguments");
  int n = point_arity;
  if (zero_value) {
    PolyExpr p;
    p.arity = param_slot + 1;
    for (auto& [e, c] : h.shell.terms) {
      ExpVec ext(param_slot + 1, 0);
      for (int i = 0; i < h.point_arity; ++i) ext[i] = e[i];
      p.add_term(ext, c);
    }
    Formula out = Formula::eq(p);
    out.arity = param_slot + 1;
    return out;
  }
  (void)n;
  // exists t: u * t^r - h(x) = 0, with u at param_slot and t last
  PolyExpr body;
  body.arity = param_slot + 2;
  ExpVec utr(param_slot + 2, 0);
  utr[param_slot] = 1;
  utr[param_slot + 1] = (int)r;
  body.add_term(utr, 1);
  for (auto& [e, c] : h.shell.terms) {
    ExpVec ext(param_slot + 2, 0);
    for (int i = 0; i < h.point_arity; ++i) ext[i] = e[i];
    body.add_term(ext, -c);
  }
  return Formula::exists(param_slot + 1, body);
}

inline CaseDecomposition case_decompose(const PredicateExpr& P, const Formula& B,
                                        const Definitions& defs, const Field& f,
                                        AdditiveCharacter psi,
                                        MultiplicativeCharacter chi,
                                        long long order_bound = 12,
                                        std::uint64_t budget = 100000000ull) {
  long long r = character_order(f, chi);
  if (r > order_bound) throw OrderTooLargeError(r, order_bound);
  EvalContext ctx{f, psi, chi, &defs};
  auto pts = formula_points(f, B, budget, ctx.options);

  std::vector<FieldTerm> chi_terms;
  collect_chi_terms(P.root, chi_terms);
  int n = B.arity;
  std::size_t m = chi_terms.size();

  CaseDecomposition out;
  out.chi_order = r;

  // partition B by the joint tuple of chi values at the occurrences
  std::map<std::vector<std::pair<bool, std::pair<long long, long long>>>,
           std::pair<std::vector<CharacterValue>, std::vector<std::vector<Fe>>>>
      cells;
  for (auto& x : pts) {
    std::vector<CharacterValue> vals;
    std::vector<std::pair<bool, std::pair<long long, long long>>> key;
    for (auto& term : chi_terms) {
      Fe hv = eval_field_term(ctx, term, x);
      CharacterValue v = chi_eval(f, chi, hv);
      vals.push_back(v);
      key.emplace_back(v.zero, std::make_pair(v.angle.num, v.angle.den));
    }
    auto& cell = cells[key];
    cell.first = vals;
    cell.second.push_back(x);
  }

  std::complex<double> reassembled(0.0, 0.0);
  for (auto& [key, cell] : cells) {
    DecompositionCell dc;
    dc.chi_values = cell.first;
    dc.points = cell.second;
    std::sort(dc.points.begin(), dc.points.end());

    if (m > 0) {
      // conjunction of per-occurrence residue conditions over parameter
      // slots n .. n+m-1, then membership verified pointwise over B
      Formula conj = Formula::make_true(n + (int)m);
      for (std::size_t j = 0; j < m; ++j) {
        Fe a = eval_field_term(ctx, chi_terms[j], dc.points.front());
        dc.representatives.push_back(a);
        Formula piece = power_residue_formula(chi_terms[j], r,
                                              dc.chi_values[j].zero, n,
                                              n + (int)j);
        piece.arity = n + (int)m;
        conj = j == 0 ? piece
                      : Formula::combine(FormulaNode::Kind::And, conj, piece);
      }
      conj.arity = n + (int)m;
      dc.ring_formula = conj;
      dc.set_equal = true;
      for (auto& x : pts) {
        std::vector<Fe> ext(x);
        for (Fe a : dc.representatives) ext.push_back(a);
        bool in_formula = eval_formula(f, conj, ext, ctx.options);
        bool in_cell = std::binary_search(dc.points.begin(), dc.points.end(), x);
        if (in_formula != in_cell) { dc.set_equal = false; break; }
      }
    } else {
      dc.set_equal = true;
      dc.ring_formula = B;
    }

    // per-cell contribution with chi occurrences frozen at the cell values
    std::vector<std::complex<double>> fixed;
    for (auto& v : dc.chi_values) fixed.push_back(v.to_complex());
    for (auto& x : dc.points) {
      std::size_t cursor = 0;
      reassembled += eval_predicate_chi_fixed(ctx, P.root, x, fixed, cursor);
    }
    out.cells.push_back(std::move(dc));
  }
  if (!pts.empty()) {
    out.reassembled_average = reassembled / (double)pts.size();
    std::complex<double> direct(0.0, 0.0);
    for (auto& x : pts) direct += eval_predicate(ctx, P, x);
    out.direct_average = direct / (double)pts.size();
  }
  out.delta_vs_direct = std::abs(out.reassembled_average - out.direct_average);
  return out;
}

// --- additive cosets: Psi is constant exactly on cosets of ker(Tr) --------------

struct AdditiveCosetReport {
  Fe base = 0;
  std::vector<Fe> coset_points;    // { x : Psi(x) = Psi(a) } by enumeration
  std::vector<Fe> formula_points;  // { x : exists y (y^p - y = c (x - a)) }
  bool set_equal = false;
};

// The level set of Psi through a equals a + ker(Tr(c .)), the image coset of
// the Artin-Schreier map y -> y^p - y scaled by the twist.
inline AdditiveCosetReport additive_coset_check(const Field& f, AdditiveCharacter psi,
                                                Fe a) {
  AdditiveCosetReport rep;
  rep.base = a;
  RationalAngle target = psi_eval(f, psi, a);
  for (Fe x = 0; x < f.q(); ++x)
    if (psi_eval(f, psi, x) == target) rep.coset_points.push_back(x);
  for (Fe x = 0; x < f.q(); ++x) {
    Fe rhs = f.mul(psi.c, f.sub(x, a));
    bool hit = false;
    for (Fe y = 0; y < f.q() && !hit; ++y)
      if (f.sub(f.pow(y, f.p()), y) == rhs) hit = true;
    if (hit) rep.formula_points.push_back(x);
  }
  rep.set_equal = rep.coset_points == rep.formula_points;
  return rep;
}

}  // namespace charlab
