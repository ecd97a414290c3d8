#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "charlab/angle.hpp"
#include "charlab/errors.hpp"
#include "charlab/rational.hpp"

namespace charlab {

using ExpVec = std::vector<int>;

// Multivariate integer polynomial: exponent vector -> coefficient, no zero
// coefficients stored. Term order (map order on exponent vectors) is the
// canonical printing order.
struct PolyExpr {
  int arity = 1;
  std::map<ExpVec, long long> terms;

  static PolyExpr constant(int arity, long long c) {
    PolyExpr p;
    p.arity = arity;
    if (c != 0) p.terms[ExpVec(arity, 0)] = c;
    return p;
  }
  static PolyExpr variable(int arity, int index) {
    PolyExpr p;
    p.arity = arity;
    ExpVec e(arity, 0);
    e[index] = 1;
    p.terms[e] = 1;
    return p;
  }

  void add_term(const ExpVec& e, long long c) {
    auto it = terms.find(e);
    if (it == terms.end()) {
      if (c != 0) terms[e] = c;
    } else {
      it->second += c;
      if (it->second == 0) terms.erase(it);
    }
  }

  friend PolyExpr operator+(const PolyExpr& a, const PolyExpr& b) {
    PolyExpr r = a;
    for (auto& [e, c] : b.terms) r.add_term(e, c);
    return r;
  }
  friend PolyExpr operator-(const PolyExpr& a, const PolyExpr& b) {
    PolyExpr r = a;
    for (auto& [e, c] : b.terms) r.add_term(e, -c);
    return r;
  }
  friend PolyExpr operator*(const PolyExpr& a, const PolyExpr& b) {
    PolyExpr r;
    r.arity = a.arity;
    for (auto& [ea, ca] : a.terms)
      for (auto& [eb, cb] : b.terms) {
        ExpVec e(ea);
        for (size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
        r.add_term(e, ca * cb);
      }
    return r;
  }
  PolyExpr pow(int k) const {
    PolyExpr r = constant(arity, 1);
    for (int i = 0; i < k; ++i) r = r * (*this);
    return r;
  }

  bool is_zero() const { return terms.empty(); }
  bool is_constant() const {
    return terms.empty() ||
           (terms.size() == 1 && terms.begin()->first == ExpVec(arity, 0));
  }
  long long total_degree() const {
    long long d = 0;
    for (auto& [e, c] : terms) {
      long long t = 0;
      for (int x : e) t += x;
      d = std::max(d, t);
    }
    return d;
  }
  // Degree in the given variable.
  int degree_in(int var) const {
    int d = 0;
    for (auto& [e, c] : terms) d = std::max(d, e[var]);
    return d;
  }
  // True if only the given variable occurs.
  bool univariate_in(int var) const {
    for (auto& [e, c] : terms)
      for (size_t i = 0; i < e.size(); ++i)
        if ((int)i != var && e[i] != 0) return false;
    return true;
  }
  friend bool operator==(const PolyExpr& a, const PolyExpr& b) {
    return a.arity == b.arity && a.terms == b.terms;
  }
};

// y_j = sum_i a_{j,i} x_i with integer entries.
struct IntegralLinearMap {
  int in_arity = 1;
  std::vector<std::vector<long long>> rows;  // rows[j][i]

  int out_arity() const { return (int)rows.size(); }
  friend bool operator==(const IntegralLinearMap& a, const IntegralLinearMap& b) {
    return a.in_arity == b.in_arity && a.rows == b.rows;
  }
};

// y_j = prod_i x_i^{a_{j,i}} with integer exponents; value 0 whenever any
// coordinate is 0 (the affine extension of a torus map).
struct IntegralMultiplicativeMap {
  int in_arity = 1;
  std::vector<std::vector<long long>> rows;

  int out_arity() const { return (int)rows.size(); }
  friend bool operator==(const IntegralMultiplicativeMap& a,
                         const IntegralMultiplicativeMap& b) {
    return a.in_arity == b.in_arity && a.rows == b.rows;
  }
};

// Finite Fourier series on T^{2n}: signed exponent vectors over the Y-block
// (additive slots) and Z-block (multiplicative slots), rational coefficients.
struct LaurentPoly {
  int n = 1;  // block size; exponent vectors have length 2n (Y then Z)
  std::map<ExpVec, Rat> terms;

  void add_term(const ExpVec& e, const Rat& c) {
    auto it = terms.find(e);
    if (it == terms.end()) {
      if (!c.is_zero()) terms[e] = c;
    } else {
      it->second = it->second + c;
      if (it->second.is_zero()) terms.erase(it);
    }
  }
  bool has_constant_term() const {
    return terms.count(ExpVec(2 * n, 0)) != 0;
  }
  long long degree() const {
    long long d = 0;
    for (auto& [e, c] : terms)
      for (int x : e) d = std::max(d, (long long)(x < 0 ? -x : x));
    return d;
  }
  friend bool operator==(const LaurentPoly& a, const LaurentPoly& b) {
    return a.n == b.n && a.terms == b.terms;
  }
};

// Factorization of one Laurent monomial into its Y-part and Z-part.
struct MonomialSplit {
  ExpVec plus_part;   // exponents on the Y-block
  ExpVec times_part;  // exponents on the Z-block
  bool plus_trivial() const {
    for (int e : plus_part)
      if (e != 0) return false;
    return true;
  }
  bool times_trivial() const {
    for (int e : times_part)
      if (e != 0) return false;
    return true;
  }
};

// Definable formulas in algebraically bounded normal form: boolean combinations of
// polynomial equations and algebraically bounded "exists t" root conditions.
struct FormulaNode;
using FormulaPtr = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  enum class Kind { True, False, Eq, Exists, Not, And, Or };
  Kind kind = Kind::True;
  // Eq: poly(x̄) = 0 with arity = formula arity.
  // Exists: poly(x̄, t) = 0 with arity = formula arity + 1; last slot is t.
  PolyExpr poly;
  std::vector<FormulaPtr> children;
};

struct Formula {
  int arity = 1;
  FormulaPtr root;

  static Formula make_true(int arity) {
    Formula f;
    f.arity = arity;
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaNode::Kind::True;
    f.root = n;
    return f;
  }
  static Formula eq(const PolyExpr& p) {
    Formula f;
    f.arity = p.arity;
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaNode::Kind::Eq;
    n->poly = p;
    f.root = n;
    return f;
  }
  static Formula exists(int arity, const PolyExpr& p) {
    if (p.arity != arity + 1)
      throw ArityMismatchError("exists body must have arity n+1");
    Formula f;
    f.arity = arity;
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaNode::Kind::Exists;
    n->poly = p;
    f.root = n;
    return f;
  }
  static Formula combine(FormulaNode::Kind k, const Formula& a, const Formula& b) {
    Formula f;
    f.arity = std::max(a.arity, b.arity);
    auto n = std::make_shared<FormulaNode>();
    n->kind = k;
    n->children = {a.root, b.root};
    f.root = n;
    return f;
  }
  static Formula negate(const Formula& a) {
    Formula f;
    f.arity = a.arity;
    auto n = std::make_shared<FormulaNode>();
    n->kind = FormulaNode::Kind::Not;
    n->children = {a.root};
    f.root = n;
    return f;
  }
};

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b);
inline bool operator==(const Formula& a, const Formula& b) {
  return a.arity == b.arity && formula_equal(a.root, b.root);
}
inline bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  if (!(a->poly == b->poly)) return false;
  if (a->children.size() != b->children.size()) return false;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (!formula_equal(a->children[i], b->children[i])) return false;
  return true;
}

// Field-valued terms appearing inside predicates: a polynomial over the
// point variables extended with opaque kappa-call atoms. The polynomial
// shell has arity point_arity + atoms.size(); slot point_arity + j holds
// atom j.
struct FieldTerm;
struct KappaCall {
  int id = 0;
  std::vector<FieldTerm> args;
};
struct FieldTerm {
  int point_arity = 1;
  PolyExpr shell;
  std::vector<KappaCall> atoms;

  static FieldTerm from_poly(const PolyExpr& p) {
    FieldTerm t;
    t.point_arity = p.arity;
    t.shell = p;
    return t;
  }
};
bool fieldterm_equal(const FieldTerm& a, const FieldTerm& b);
inline bool kappa_call_equal(const KappaCall& a, const KappaCall& b) {
  if (a.id != b.id || a.args.size() != b.args.size()) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!fieldterm_equal(a.args[i], b.args[i])) return false;
  return true;
}
inline bool fieldterm_equal(const FieldTerm& a, const FieldTerm& b) {
  if (a.point_arity != b.point_arity || !(a.shell == b.shell)) return false;
  if (a.atoms.size() != b.atoms.size()) return false;
  for (size_t i = 0; i < a.atoms.size(); ++i)
    if (!kappa_call_equal(a.atoms[i], b.atoms[i])) return false;
  return true;
}

// Complex-valued predicate expressions over {constants, i, Psi(term),
// Chi(term), indicators, Theta references, +, *, conjugation, modulus}.
struct PredicateNode;
using PredicatePtr = std::shared_ptr<const PredicateNode>;

struct PredicateNode {
  enum class Kind { Const, Psi, Chi, Ind, ThetaRef, Sum, Prod, Conj, Abs };
  Kind kind = Kind::Const;
  Rat const_re, const_im;                 // Const
  FieldTerm term;                         // Psi / Chi argument
  Formula formula;                        // Ind
  int theta_id = 0;                       // ThetaRef
  std::vector<FieldTerm> theta_args;      // ThetaRef
  std::vector<PredicatePtr> children;     // Sum / Prod / Conj / Abs
};

struct PredicateExpr {
  int arity = 1;
  PredicatePtr root;
};

bool predicate_equal(const PredicatePtr& a, const PredicatePtr& b);
inline bool operator==(const PredicateExpr& a, const PredicateExpr& b) {
  return a.arity == b.arity && predicate_equal(a.root, b.root);
}
inline bool predicate_equal(const PredicatePtr& a, const PredicatePtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  if (!(a->const_re == b->const_re) || !(a->const_im == b->const_im)) return false;
  if (!fieldterm_equal(a->term, b->term)) return false;
  if (!(a->formula == b->formula)) return false;
  if (a->theta_id != b->theta_id) return false;
  if (a->theta_args.size() != b->theta_args.size()) return false;
  for (size_t i = 0; i < a->theta_args.size(); ++i)
    if (!fieldterm_equal(a->theta_args[i], b->theta_args[i])) return false;
  if (a->children.size() != b->children.size()) return false;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (!predicate_equal(a->children[i], b->children[i])) return false;
  return true;
}

// Symbolic finite character sum Theta_sym over a restricted compositional
// fiber family: tagged unions of blocks, each block a cartesian product of
// independent univariate root conditions and rational constants. Slot j
// binds fiber variable z_j; a root condition is a polynomial in the
// parameters a_1..a_m and its own z (the last slot of the poly).
struct ThetaSpec {
  struct Slot {
    bool is_const = false;
    Rat constant;      // when is_const
    PolyExpr root;     // arity = param_arity + 1, last variable = z
  };
  struct Block {
    std::vector<Slot> slots;  // exactly fiber_arity entries
  };
  int param_arity = 1;
  int fiber_arity = 1;
  long long declared_bound = 0;  // 0 = derive from slot degrees
  std::vector<Block> blocks;
  std::vector<long long> g;  // integral linear row over z variables
  std::vector<long long> h;  // integral multiplicative row over z variables

  long long derived_bound() const {
    if (declared_bound > 0) return declared_bound;
    long long total = 0;
    for (auto& b : blocks) {
      long long prod = 1;
      for (auto& s : b.slots)
        prod *= s.is_const ? 1 : std::max(1, s.root.degree_in(param_arity));
      total += prod;
    }
    return total;
  }
};

inline bool operator==(const ThetaSpec::Slot& a, const ThetaSpec::Slot& b) {
  return a.is_const == b.is_const && a.constant == b.constant && a.root == b.root;
}
inline bool operator==(const ThetaSpec::Block& a, const ThetaSpec::Block& b) {
  return a.slots == b.slots;
}
inline bool operator==(const ThetaSpec& a, const ThetaSpec& b) {
  return a.param_arity == b.param_arity && a.fiber_arity == b.fiber_arity &&
         a.declared_bound == b.declared_bound && a.blocks == b.blocks &&
         a.g == b.g && a.h == b.h;
}

// kappa_{P,Q}: P, Q polynomials in (params, y); last slot is y.
struct KappaSpec {
  int param_arity = 1;
  PolyExpr P;
  PolyExpr Q;
};
inline bool operator==(const KappaSpec& a, const KappaSpec& b) {
  return a.param_arity == b.param_arity && a.P == b.P && a.Q == b.Q;
}

// Univariate polynomial with rational coefficients (low degree first).
struct RatPoly {
  std::vector<Rat> coeffs;

  int degree() const {
    for (int i = (int)coeffs.size() - 1; i >= 0; --i)
      if (!coeffs[i].is_zero()) return i;
    return 0;
  }
  friend bool operator==(const RatPoly& a, const RatPoly& b) {
    RatPoly x = a, y = b;
    while (!x.coeffs.empty() && x.coeffs.back().is_zero()) x.coeffs.pop_back();
    while (!y.coeffs.empty() && y.coeffs.back().is_zero()) y.coeffs.pop_back();
    return x.coeffs == y.coeffs;
  }
};

// Target data for the limit-theory prime/character witness search.
struct WitnessSpec {
  RatPoly min_poly;                       // generator beta over Q
  std::vector<std::pair<RatPoly, RationalAngle>> gens;   // chi targets
  std::vector<std::pair<RatPoly, RationalAngle>> basis;  // psi targets
  Rat tolerance{1, 20};
  long long R = 1;
  long long f = 1;
  RatPoly lambda_R;           // generator of the R-th roots of unity
  RationalAngle s_R;          // exact chi target on lambda_R
  long long K = 1;            // minimum character order
  long long p_min = 3;
  long long p_max = 0;        // 0 = take from CLI
};
inline bool operator==(const WitnessSpec& a, const WitnessSpec& b) {
  return a.min_poly == b.min_poly && a.gens == b.gens && a.basis == b.basis &&
         a.tolerance == b.tolerance && a.R == b.R && a.f == b.f &&
         a.lambda_R == b.lambda_R && a.s_R == b.s_R && a.K == b.K &&
         a.p_min == b.p_min && a.p_max == b.p_max;
}

// A parsed .cdl file: declarations by kind and id.
struct Definitions {
  std::map<int, PolyExpr> polys;
  std::map<int, LaurentPoly> laurents;
  std::map<int, Formula> formulas;
  std::map<int, IntegralLinearMap> linmaps;
  std::map<int, IntegralMultiplicativeMap> multmaps;
  std::map<int, PredicateExpr> predicates;
  std::map<int, ThetaSpec> thetas;
  std::map<int, KappaSpec> kappas;
  std::map<int, WitnessSpec> witnesses;

  friend bool operator==(const Definitions& a, const Definitions& b) {
    return a.polys == b.polys && a.laurents == b.laurents &&
           a.formulas == b.formulas && a.linmaps == b.linmaps &&
           a.multmaps == b.multmaps && a.predicates == b.predicates &&
           a.thetas == b.thetas && a.kappas == b.kappas &&
           a.witnesses == b.witnesses;
  }
};

}  // namespace charlab
