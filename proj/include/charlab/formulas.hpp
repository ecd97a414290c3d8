#pragma once

#include <complex>
#include <vector>

#include "charlab/ast.hpp"
#include "charlab/theta.hpp"

namespace charlab {

struct EvalOptions {
  // Cap on exhaustive scans for algebraically bounded quantifiers.
  std::uint64_t exists_scan_cap = 1ull << 22;
};

// --- definable formulas ---------------------------------------------------------

inline bool eval_formula_node(const Field& f, const FormulaPtr& n,
                              std::vector<Fe>& point, int arity,
                              const EvalOptions& opt) {
  switch (n->kind) {
    case FormulaNode::Kind::True:
      return true;
    case FormulaNode::Kind::False:
      return false;
    case FormulaNode::Kind::Eq:
      return eval_poly(f, n->poly, point) == 0;
    case FormulaNode::Kind::Exists: {
      if (f.q() > opt.exists_scan_cap)
        throw CapExceededError(f.q(), opt.exists_scan_cap);
      std::vector<Fe> ext(point.begin(), point.begin() + arity);
      ext.push_back(0);
      for (std::uint64_t t = 0; t < f.q(); ++t) {
        ext[arity] = (Fe)t;
        if (eval_poly(f, n->poly, ext) == 0) return true;
      }
      return false;
    }
    case FormulaNode::Kind::Not:
      return !eval_formula_node(f, n->children[0], point, arity, opt);
    case FormulaNode::Kind::And:
      return eval_formula_node(f, n->children[0], point, arity, opt) &&
             eval_formula_node(f, n->children[1], point, arity, opt);
    case FormulaNode::Kind::Or:
      return eval_formula_node(f, n->children[0], point, arity, opt) ||
             eval_formula_node(f, n->children[1], point, arity, opt);
  }
  return false;
}

inline bool eval_formula(const Field& f, const Formula& phi, std::vector<Fe> point,
                         const EvalOptions& opt = {}) {
  if ((int)point.size() < phi.arity)
    throw ArityMismatchError("point arity below formula arity");
  return eval_formula_node(f, phi.root, point, phi.arity, opt);
}

// All points of F_q^arity satisfying the formula, in canonical code order.
// When a parameter tuple is supplied it is bound to the trailing variable
// slots and only the leading free coordinates are enumerated.
inline std::vector<std::vector<Fe>> formula_points(
    const Field& f, const Formula& phi, std::uint64_t budget = 100000000ull,
    const EvalOptions& opt = {}, const std::vector<Fe>& params = {}) {
  int free_arity = phi.arity - (int)params.size();
  if (free_arity < 0)
    throw ArityMismatchError("more parameters than formula variables");
  std::uint64_t total = 1;
  for (int i = 0; i < free_arity; ++i) {
    total *= f.q();
    if (total > budget) throw BudgetExceededError(total, budget);
  }
  std::vector<std::vector<Fe>> out;
  std::vector<Fe> pt(phi.arity, 0);
  for (std::size_t i = 0; i < params.size(); ++i) pt[free_arity + i] = params[i];
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    for (int i = 0; i < free_arity; ++i) { pt[i] = (Fe)(c % f.q()); c /= f.q(); }
    if (eval_formula(f, phi, pt, opt)) out.push_back(pt);
  }
  return out;
}

// --- predicate evaluation --------------------------------------------------------

struct EvalContext {
  const Field& field;
  AdditiveCharacter psi;
  MultiplicativeCharacter chi;
  const Definitions* defs = nullptr;
  EvalOptions options = {};
};

inline Fe eval_field_term(const EvalContext& ctx, const FieldTerm& term,
                          const std::vector<Fe>& point);

inline Fe eval_kappa_call(const EvalContext& ctx, const KappaCall& call,
                          const std::vector<Fe>& point) {
  if (!ctx.defs) throw UnresolvedReferenceError("kappa", call.id);
  auto it = ctx.defs->kappas.find(call.id);
  if (it == ctx.defs->kappas.end()) throw UnresolvedReferenceError("kappa", call.id);
  const KappaSpec& spec = it->second;
  if ((int)call.args.size() != spec.param_arity)
    throw ArityMismatchError("kappa call arity mismatch");
  std::vector<Fe> params;
  params.reserve(call.args.size());
  for (auto& a : call.args) params.push_back(eval_field_term(ctx, a, point));
  return kappa_eval(ctx.field, spec, params);
}

inline Fe eval_field_term(const EvalContext& ctx, const FieldTerm& term,
                          const std::vector<Fe>& point) {
  if ((int)point.size() < term.point_arity)
    throw ArityMismatchError("point arity below field-term arity");
  std::vector<Fe> ext(point.begin(), point.begin() + term.point_arity);
  for (auto& atom : term.atoms) ext.push_back(eval_kappa_call(ctx, atom, point));
  return eval_poly(ctx.field, term.shell, ext);
}

inline std::complex<double> eval_predicate_node(const EvalContext& ctx,
                                                const PredicatePtr& n,
                                                const std::vector<Fe>& point) {
  using K = PredicateNode::Kind;
  switch (n->kind) {
    case K::Const:
      return {n->const_re.to_double(), n->const_im.to_double()};
    case K::Psi:
      return psi_complex(ctx.field, ctx.psi, eval_field_term(ctx, n->term, point));
    case K::Chi:
      return chi_complex(ctx.field, ctx.chi, eval_field_term(ctx, n->term, point));
    case K::Ind: {
      std::vector<Fe> pt(point.begin(), point.begin() + n->formula.arity);
      return eval_formula(ctx.field, n->formula, pt, ctx.options) ? 1.0 : 0.0;
    }
    case K::ThetaRef: {
      if (!ctx.defs) throw UnresolvedReferenceError("theta", n->theta_id);
      auto it = ctx.defs->thetas.find(n->theta_id);
      if (it == ctx.defs->thetas.end())
        throw UnresolvedReferenceError("theta", n->theta_id);
      std::vector<Fe> params;
      params.reserve(n->theta_args.size());
      for (auto& a : n->theta_args) params.push_back(eval_field_term(ctx, a, point));
      return theta_eval(ctx.field, it->second, params, ctx.psi, ctx.chi);
    }
    case K::Sum: {
      std::complex<double> acc(0.0, 0.0);
      for (auto& c : n->children) acc += eval_predicate_node(ctx, c, point);
      return acc;
    }
    case K::Prod: {
      std::complex<double> acc(1.0, 0.0);
      for (auto& c : n->children) acc *= eval_predicate_node(ctx, c, point);
      return acc;
    }
    case K::Conj:
      return std::conj(eval_predicate_node(ctx, n->children[0], point));
    case K::Abs:
      return std::abs(eval_predicate_node(ctx, n->children[0], point));
  }
  return {0.0, 0.0};
}

inline std::complex<double> eval_predicate(const EvalContext& ctx,
                                           const PredicateExpr& p,
                                           const std::vector<Fe>& point) {
  if ((int)point.size() < p.arity)
    throw ArityMismatchError("point arity below predicate arity");
  return eval_predicate_node(ctx, p.root, point);
}

// Syntactic sup-norm bound of a predicate: characters and indicators are
// bounded by 1, Theta terms by their fiber bound.
inline double predicate_bound(const PredicatePtr& n, const Definitions* defs) {
  using K = PredicateNode::Kind;
  switch (n->kind) {
    case K::Const: {
      double re = n->const_re.to_double(), im = n->const_im.to_double();
      return std::sqrt(re * re + im * im);
    }
    case K::Psi:
    case K::Chi:
    case K::Ind:
      return 1.0;
    case K::ThetaRef: {
      if (defs) {
        auto it = defs->thetas.find(n->theta_id);
        if (it != defs->thetas.end()) return (double)it->second.derived_bound();
      }
      return 0.0;
    }
    case K::Sum: {
      double acc = 0;
      for (auto& c : n->children) acc += predicate_bound(c, defs);
      return acc;
    }
    case K::Prod: {
      double acc = 1;
      for (auto& c : n->children) acc *= predicate_bound(c, defs);
      return acc;
    }
    case K::Conj:
    case K::Abs:
      return predicate_bound(n->children[0], defs);
  }
  return 0.0;
}

// Number of Chi occurrences (used by the case decomposition).
inline void collect_chi_terms(const PredicatePtr& n, std::vector<FieldTerm>& out) {
  if (n->kind == PredicateNode::Kind::Chi) out.push_back(n->term);
  for (auto& c : n->children) collect_chi_terms(c, out);
}

// Replace every Chi occurrence by the fixed complex value assigned to its
// position (in collection order); used when reassembling averages from cells.
inline std::complex<double> eval_predicate_chi_fixed(
    const EvalContext& ctx, const PredicatePtr& n, const std::vector<Fe>& point,
    const std::vector<std::complex<double>>& chi_values, std::size_t& cursor) {
  using K = PredicateNode::Kind;
  switch (n->kind) {
    case K::Chi:
      return chi_values.at(cursor++);
    case K::Sum: {
      std::complex<double> acc(0.0, 0.0);
      for (auto& c : n->children)
        acc += eval_predicate_chi_fixed(ctx, c, point, chi_values, cursor);
      return acc;
    }
    case K::Prod: {
      std::complex<double> acc(1.0, 0.0);
      for (auto& c : n->children)
        acc *= eval_predicate_chi_fixed(ctx, c, point, chi_values, cursor);
      return acc;
    }
    case K::Conj:
      return std::conj(eval_predicate_chi_fixed(ctx, n->children[0], point,
                                                chi_values, cursor));
    case K::Abs:
      return std::abs(eval_predicate_chi_fixed(ctx, n->children[0], point,
                                               chi_values, cursor));
    default:
      return eval_predicate_node(ctx, n, point);
  }
}

// --- Laurent polynomials on tori ---------------------------------------------

struct LaurentSplit {
  std::vector<std::pair<Rat, MonomialSplit>> monomials;
  bool is_real_on_torus = false;
  bool has_constant_term = false;
};

// Factor each monomial into its Y-part and Z-part and decide real-valuedness
// symbolically: real on T^{2n} iff coefficients are symmetric under exponent
// negation.
inline LaurentSplit split_laurent_monomials(const LaurentPoly& h) {
  LaurentSplit out;
  out.has_constant_term = h.has_constant_term();
  out.is_real_on_torus = true;
  for (auto& [e, c] : h.terms) {
    MonomialSplit ms;
    ms.plus_part.assign(e.begin(), e.begin() + h.n);
    ms.times_part.assign(e.begin() + h.n, e.end());
    out.monomials.emplace_back(c, ms);
    ExpVec neg(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) neg[i] = -e[i];
    auto it = h.terms.find(neg);
    if (it == h.terms.end() || !(it->second == c)) out.is_real_on_torus = false;
  }
  return out;
}

// Evaluate h at torus points given as complex numbers (Y block then Z block).
inline std::complex<double> laurent_eval(const LaurentPoly& h,
                                         const std::vector<std::complex<double>>& yz) {
  std::complex<double> acc(0.0, 0.0);
  for (auto& [e, c] : h.terms) {
    std::complex<double> t(c.to_double(), 0.0);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      std::complex<double> b = yz[i];
      int k = e[i];
      if (k < 0) { b = std::conj(b); k = -k; }  // |coord| = 1 on the torus
      for (int j = 0; j < k; ++j) t *= b;
    }
    acc += t;
  }
  return acc;
}

// Exact evaluation when the torus point is given by rational angles: each
// monomial contributes coeff * angle(<e, angles>).
inline std::complex<double> laurent_eval_angles(const LaurentPoly& h,
                                                const std::vector<RationalAngle>& yz) {
  std::complex<double> acc(0.0, 0.0);
  for (auto& [e, c] : h.terms) {
    RationalAngle a(0, 1);
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] != 0) a = a + yz[i].scaled(e[i]);
    acc += c.to_double() * a.to_complex();
  }
  return acc;
}

// --- basic predicates ----------------------------------------------------------

// Piecewise rational-linear combinations of Theta terms over a definable
// partition: lambda * Theta + i * lambda' * Theta' on each cell. The cells
// must partition F^arity; verify_partition checks that exhaustively.
struct BasicPredicate {
  struct Piece {
    Formula cell;
    Rat lambda;
    ThetaSpec theta1;
    Rat lambda_prime;
    ThetaSpec theta2;
  };
  int arity = 1;
  std::vector<Piece> pieces;
};

inline std::complex<double> eval_basic_predicate(const EvalContext& ctx,
                                                 const BasicPredicate& bp,
                                                 const std::vector<Fe>& point) {
  for (auto& piece : bp.pieces) {
    std::vector<Fe> pt(point.begin(), point.begin() + piece.cell.arity);
    if (!eval_formula(ctx.field, piece.cell, pt, ctx.options)) continue;
    std::complex<double> v =
        piece.lambda.to_double() *
        theta_eval(ctx.field, piece.theta1, point, ctx.psi, ctx.chi);
    v += std::complex<double>(0.0, piece.lambda_prime.to_double()) *
         theta_eval(ctx.field, piece.theta2, point, ctx.psi, ctx.chi);
    return v;
  }
  throw Error("basic predicate cells do not cover the point");
}

// Exhaustive disjoint-and-covering check over F_q^arity.
inline bool verify_partition(const Field& f, const BasicPredicate& bp,
                             const EvalOptions& opt = {}) {
  std::uint64_t total = 1;
  for (int i = 0; i < bp.arity; ++i) total *= f.q();
  std::vector<Fe> pt(bp.arity, 0);
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    for (int i = 0; i < bp.arity; ++i) { pt[i] = (Fe)(c % f.q()); c /= f.q(); }
    int hits = 0;
    for (auto& piece : bp.pieces) {
      std::vector<Fe> sub(pt.begin(), pt.begin() + piece.cell.arity);
      if (eval_formula(f, piece.cell, sub, opt)) ++hits;
    }
    if (hits != 1) return false;
  }
  return true;
}

}  // namespace charlab
