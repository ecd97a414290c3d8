#pragma once

#include <functional>
#include <sstream>
#include <string>

#include "charlab/ast.hpp"

namespace charlab {

// Canonical printing: parse(print(ast)) == ast. Terms print in the map order
// (lexicographic by exponent vector); products always use explicit '*'.

namespace detail {

using Namer = std::function<std::string(int)>;

inline std::string print_monomial(const ExpVec& e, const Namer& namer) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0) continue;
    if (!s.empty()) s += "*";
    s += namer((int)i);
    if (e[i] != 1) s += "^" + std::to_string(e[i]);
  }
  return s;
}

inline std::string print_poly_terms(const std::map<ExpVec, long long>& terms,
                                    const Namer& namer) {
  if (terms.empty()) return "0";
  std::string s;
  bool first = true;
  for (auto& [e, c] : terms) {
    long long mag = c < 0 ? -c : c;
    std::string mono = print_monomial(e, namer);
    std::string body;
    if (mono.empty()) body = std::to_string(mag);
    else if (mag == 1) body = mono;
    else body = std::to_string(mag) + "*" + mono;
    if (first) {
      s += (c < 0 ? "-" : "") + body;
      first = false;
    } else {
      s += (c < 0 ? " - " : " + ") + body;
    }
  }
  return s;
}

inline std::string x_namer(int i) { return "x" + std::to_string(i + 1); }

}  // namespace detail

inline std::string print_poly(const PolyExpr& p,
                              const detail::Namer& namer = detail::x_namer) {
  return detail::print_poly_terms(p.terms, namer);
}

inline std::string print_laurent(const LaurentPoly& h) {
  if (h.terms.empty()) return "0";
  auto namer = [&](int i) {
    if (i < h.n) return "Y" + std::to_string(i + 1);
    return "Z" + std::to_string(i - h.n + 1);
  };
  std::string s;
  bool first = true;
  for (auto& [e, c] : h.terms) {
    Rat mag = c.abs();
    std::string mono = detail::print_monomial(e, namer);
    std::string body;
    if (mono.empty()) body = mag.str();
    else if (mag == Rat(1)) body = mono;
    else body = mag.str() + "*" + mono;
    bool neg = c.num < 0;
    if (first) {
      s += (neg ? "-" : "") + body;
      first = false;
    } else {
      s += (neg ? " - " : " + ") + body;
    }
  }
  return s;
}

inline std::string print_formula_node(const FormulaPtr& n, int arity);

inline std::string print_formula_child(const FormulaPtr& n, int arity,
                                       bool parenthesize) {
  std::string s = print_formula_node(n, arity);
  if (parenthesize) return "(" + s + ")";
  return s;
}

inline std::string print_formula_node(const FormulaPtr& n, int arity) {
  using K = FormulaNode::Kind;
  switch (n->kind) {
    case K::True:
      return "true";
    case K::False:
      return "false";
    case K::Eq:
      return print_poly(n->poly) + " = 0";
    case K::Exists: {
      auto namer = [&](int i) {
        return i < arity ? "x" + std::to_string(i + 1) : std::string("t");
      };
      return "exists t (" + print_poly(n->poly, namer) + " = 0)";
    }
    case K::Not: {
      auto& c = n->children[0];
      bool paren = c->kind == K::And || c->kind == K::Or || c->kind == K::Eq ||
                   c->kind == K::Exists;
      return "not " + print_formula_child(c, arity, paren);
    }
    case K::And: {
      std::string s;
      for (std::size_t i = 0; i < n->children.size(); ++i) {
        if (i) s += " and ";
        bool paren = n->children[i]->kind == K::Or;
        s += print_formula_child(n->children[i], arity, paren);
      }
      return s;
    }
    case K::Or: {
      std::string s;
      for (std::size_t i = 0; i < n->children.size(); ++i) {
        if (i) s += " or ";
        s += print_formula_child(n->children[i], arity, false);
      }
      return s;
    }
  }
  return "";
}

inline std::string print_formula(const Formula& f) {
  return print_formula_node(f.root, f.arity);
}

inline std::string print_row_linear(const std::vector<long long>& row,
                                    const detail::Namer& namer) {
  std::map<ExpVec, long long> terms;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] == 0) continue;
    ExpVec e(row.size(), 0);
    e[i] = 1;
    terms[e] = row[i];
  }
  return detail::print_poly_terms(terms, namer);
}

inline std::string print_row_monomial(const std::vector<long long>& row,
                                      const detail::Namer& namer) {
  ExpVec e(row.begin(), row.end());
  std::string s = detail::print_monomial(e, namer);
  return s.empty() ? "1" : s;
}

inline std::string print_linmap(const IntegralLinearMap& m) {
  std::string s;
  for (std::size_t j = 0; j < m.rows.size(); ++j) {
    if (j) s += "; ";
    std::vector<long long> row = m.rows[j];
    row.resize(m.in_arity, 0);
    s += "y" + std::to_string(j + 1) + " = " +
         print_row_linear(row, detail::x_namer);
  }
  return s;
}

inline std::string print_multmap(const IntegralMultiplicativeMap& m) {
  std::string s;
  for (std::size_t j = 0; j < m.rows.size(); ++j) {
    if (j) s += "; ";
    std::vector<long long> row = m.rows[j];
    row.resize(m.in_arity, 0);
    s += "y" + std::to_string(j + 1) + " = " +
         print_row_monomial(row, detail::x_namer);
  }
  return s;
}

inline std::string print_field_term(const FieldTerm& t);

inline std::string print_kappa_call(const KappaCall& c) {
  std::string s = "kappa" + std::to_string(c.id) + "(";
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (i) s += ", ";
    s += print_field_term(c.args[i]);
  }
  return s + ")";
}

inline std::string print_field_term(const FieldTerm& t) {
  auto namer = [&](int i) {
    if (i < t.point_arity) return "x" + std::to_string(i + 1);
    return print_kappa_call(t.atoms[i - t.point_arity]);
  };
  return print_poly(t.shell, namer);
}

inline std::string print_predicate_node(const PredicatePtr& n);

inline std::string print_const(const Rat& re, const Rat& im) {
  if (im.is_zero()) return re.str();
  std::string imag = im == Rat(1) ? "i" : im.str() + "*i";
  if (re.is_zero()) return imag;
  if (im.num < 0) {
    Rat m = -im;
    imag = m == Rat(1) ? "i" : m.str() + "*i";
    return "(" + re.str() + " - " + imag + ")";
  }
  return "(" + re.str() + " + " + imag + ")";
}

inline std::string print_predicate_node(const PredicatePtr& n) {
  using K = PredicateNode::Kind;
  switch (n->kind) {
    case K::Const:
      return print_const(n->const_re, n->const_im);
    case K::Psi:
      return "Psi(" + print_field_term(n->term) + ")";
    case K::Chi:
      return "Chi(" + print_field_term(n->term) + ")";
    case K::Ind:
      return "ind(" + print_formula(n->formula) + ")";
    case K::ThetaRef: {
      std::string s = "theta" + std::to_string(n->theta_id) + "(";
      for (std::size_t i = 0; i < n->theta_args.size(); ++i) {
        if (i) s += ", ";
        s += print_field_term(n->theta_args[i]);
      }
      return s + ")";
    }
    case K::Sum: {
      // a constant prints without parens only when purely real or purely
      // imaginary; extract the sign in exactly those cases
      auto extractable = [](const Rat& re, const Rat& im) {
        return (im.is_zero() && re.num < 0) || (re.is_zero() && im.num < 0);
      };
      std::string s;
      for (std::size_t i = 0; i < n->children.size(); ++i) {
        auto& c = n->children[i];
        bool neg = false;
        std::string body;
        if (c->kind == K::Const && extractable(c->const_re, c->const_im)) {
          neg = true;
          body = print_const(-c->const_re, -c->const_im);
        } else if (c->kind == K::Prod && !c->children.empty() &&
                   c->children[0]->kind == K::Const &&
                   extractable(c->children[0]->const_re,
                               c->children[0]->const_im)) {
          neg = true;
          auto neg_head = std::make_shared<PredicateNode>(*c);
          auto head = std::make_shared<PredicateNode>(*c->children[0]);
          head->const_re = -head->const_re;
          head->const_im = -head->const_im;
          neg_head->children[0] = head;
          // drop a unit head entirely
          if (head->const_re == Rat(1) && head->const_im.is_zero()) {
            if (neg_head->children.size() == 2) {
              body = print_predicate_node(neg_head->children[1]);
            } else {
              auto tail = std::make_shared<PredicateNode>();
              tail->kind = K::Prod;
              tail->children.assign(neg_head->children.begin() + 1,
                                    neg_head->children.end());
              body = print_predicate_node(tail);
            }
          } else {
            body = print_predicate_node(neg_head);
          }
        } else {
          body = print_predicate_node(c);
        }
        if (i == 0) s += (neg ? "-" : "") + body;
        else s += (neg ? " - " : " + ") + body;
      }
      return s;
    }
    case K::Prod: {
      std::string s;
      for (std::size_t i = 0; i < n->children.size(); ++i) {
        if (i) s += "*";
        auto& c = n->children[i];
        bool paren = c->kind == K::Sum ||
                     (c->kind == K::Const && c->const_im.is_zero() &&
                      (c->const_re.num < 0 && i > 0));
        std::string body = print_predicate_node(c);
        s += paren ? "(" + body + ")" : body;
      }
      return s;
    }
    case K::Conj:
      return "conj(" + print_predicate_node(n->children[0]) + ")";
    case K::Abs:
      return "abs(" + print_predicate_node(n->children[0]) + ")";
  }
  return "";
}

inline std::string print_predicate(const PredicateExpr& p) {
  return print_predicate_node(p.root);
}

inline std::string print_theta(const ThetaSpec& t) {
  std::ostringstream os;
  os << "params " << t.param_arity << "; vars " << t.fiber_arity;
  if (t.declared_bound > 0) os << "; bound " << t.declared_bound;
  for (auto& b : t.blocks) {
    os << "; block ";
    for (std::size_t i = 0; i < b.slots.size(); ++i) {
      if (i) os << ", ";
      auto& s = b.slots[i];
      if (s.is_const) {
        os << "const " << (s.constant.num < 0 ? "(" + s.constant.str() + ")"
                                              : s.constant.str());
      } else {
        auto namer = [&](int j) {
          return j < t.param_arity ? "a" + std::to_string(j + 1) : std::string("z");
        };
        os << "root(" << print_poly(s.root, namer) << ")";
      }
    }
  }
  auto znamer = [](int i) { return "z" + std::to_string(i + 1); };
  os << "; g: " << print_row_linear(t.g, znamer);
  os << "; h: " << print_row_monomial(t.h, znamer);
  return os.str();
}

inline std::string print_kappa(const KappaSpec& k) {
  auto namer = [&](int i) {
    return i < k.param_arity ? "x" + std::to_string(i + 1) : std::string("y");
  };
  return "P: " + print_poly(k.P, namer) + "; Q: " + print_poly(k.Q, namer);
}

inline std::string print_rat_poly(const RatPoly& p) {
  std::string s;
  bool first = true;
  for (int d = 0; d < (int)p.coeffs.size(); ++d) {
    const Rat& c = p.coeffs[d];
    if (c.is_zero()) continue;
    Rat mag = c.abs();
    std::string mono = d == 0 ? "" : (d == 1 ? "x1" : "x1^" + std::to_string(d));
    std::string body;
    if (mono.empty()) body = mag.str();
    else if (mag == Rat(1)) body = mono;
    else body = mag.str() + "*" + mono;
    bool neg = c.num < 0;
    if (first) {
      s += (neg ? "-" : "") + body;
      first = false;
    } else {
      s += (neg ? " - " : " + ") + body;
    }
  }
  return s.empty() ? "0" : s;
}

inline std::string print_angle(const RationalAngle& a) {
  if (a.num == 0) return "0";
  if (a.den == 1) return std::to_string(a.num);
  return std::to_string(a.num) + "/" + std::to_string(a.den);
}

inline std::string print_witness(const WitnessSpec& w) {
  std::ostringstream os;
  os << "minpoly " << print_rat_poly(w.min_poly);
  for (auto& [p, a] : w.gens) os << "; gen " << print_rat_poly(p) << " -> " << print_angle(a);
  for (auto& [p, a] : w.basis)
    os << "; basis " << print_rat_poly(p) << " -> " << print_angle(a);
  os << "; tol " << w.tolerance.str();
  os << "; rou " << w.R << " " << w.f << " ";
  std::string lam = print_rat_poly(w.lambda_R);
  if (!lam.empty() && lam[0] == '-') lam = "(" + lam + ")";
  os << lam << " -> " << print_angle(w.s_R);
  os << "; orderfloor " << w.K;
  if (w.p_max > 0) os << "; primes " << w.p_min << ".." << w.p_max;
  return os.str();
}

inline std::string print_definitions(const Definitions& defs) {
  std::ostringstream os;
  for (auto& [id, p] : defs.polys) os << "poly " << id << ": " << print_poly(p) << "\n";
  for (auto& [id, p] : defs.laurents)
    os << "laurent " << id << ": " << print_laurent(p) << "\n";
  for (auto& [id, p] : defs.formulas)
    os << "formula " << id << ": " << print_formula(p) << "\n";
  for (auto& [id, p] : defs.linmaps)
    os << "linmap " << id << ": " << print_linmap(p) << "\n";
  for (auto& [id, p] : defs.multmaps)
    os << "multmap " << id << ": " << print_multmap(p) << "\n";
  for (auto& [id, p] : defs.predicates)
    os << "predicate " << id << ": " << print_predicate(p) << "\n";
  for (auto& [id, p] : defs.thetas)
    os << "theta " << id << ": " << print_theta(p) << "\n";
  for (auto& [id, p] : defs.kappas)
    os << "kappa " << id << ": " << print_kappa(p) << "\n";
  for (auto& [id, p] : defs.witnesses)
    os << "witness " << id << ": " << print_witness(p) << "\n";
  return os.str();
}

}  // namespace charlab
