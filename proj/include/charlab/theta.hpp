#pragma once

#include <complex>
#include <set>
#include <vector>

#include "charlab/ast.hpp"
#include "charlab/characters.hpp"
#include "charlab/field.hpp"

namespace charlab {

// --- polynomial evaluation over a field -------------------------------------

inline Fe eval_poly(const Field& f, const PolyExpr& p, const std::vector<Fe>& point) {
  if ((int)point.size() < p.arity)
    throw ArityMismatchError("point has fewer coordinates than the polynomial arity");
  Fe acc = 0;
  for (auto& [e, c] : p.terms) {
    Fe t = f.from_int(c);
    for (int i = 0; i < p.arity && t != 0; ++i)
      if (e[i] != 0) t = f.mul(t, f.pow(point[i], e[i]));
    acc = f.add(acc, t);
  }
  return acc;
}

// Rational constant mapped into the prime subfield.
inline Fe eval_rat(const Field& f, const Rat& r) {
  Fe den = f.from_int(r.den);
  if (den == 0) throw Error("rational constant with denominator divisible by p");
  return f.mul(f.from_int(r.num), f.inv(den));
}

// Integral linear row: sum of g_i * z_i.
inline Fe eval_linear_row(const Field& f, const std::vector<long long>& row,
                          const std::vector<Fe>& z) {
  Fe acc = 0;
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] != 0) acc = f.add(acc, f.mul(f.from_int(row[i]), z[i]));
  return acc;
}

// Integral multiplicative row under the affine zero convention: the value is
// 0 whenever any coordinate is 0.
inline Fe eval_mult_row(const Field& f, const std::vector<long long>& row,
                        const std::vector<Fe>& z) {
  for (std::size_t i = 0; i < row.size(); ++i)
    if (z[i] == 0) return 0;
  Fe acc = 1;
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] != 0) acc = f.mul(acc, f.pow(z[i], row[i]));
  return acc;
}

// --- Theta_sym fibers and evaluation -----------------------------------------

// The set X_a^phi for the restricted compositional fiber family: union over
// blocks of cartesian products of per-slot root sets / constants. Returned
// sorted and deduplicated.
inline std::vector<std::vector<Fe>> theta_fiber(const Field& f, const ThetaSpec& spec,
                                                const std::vector<Fe>& params) {
  if ((int)params.size() != spec.param_arity)
    throw ArityMismatchError("theta parameter tuple has wrong length");
  std::set<std::vector<Fe>> fiber;
  for (auto& block : spec.blocks) {
    std::vector<std::vector<Fe>> slot_values;
    bool empty = false;
    for (auto& slot : block.slots) {
      std::vector<Fe> vals;
      if (slot.is_const) {
        vals.push_back(eval_rat(f, slot.constant));
      } else {
        // univariate root scan; the z variable is the last polynomial slot
        std::vector<Fe> pt(params);
        pt.push_back(0);
        int zi = spec.param_arity;
        bool identically_zero = true;
        // collect coefficients of z-powers at these parameters
        std::vector<Fe> coeffs(slot.root.degree_in(zi) + 1, 0);
        for (auto& [e, c] : slot.root.terms) {
          Fe t = f.from_int(c);
          for (int i = 0; i < spec.param_arity && t != 0; ++i)
            if (e[i] != 0) t = f.mul(t, f.pow(params[i], e[i]));
          coeffs[e[zi]] = f.add(coeffs[e[zi]], t);
        }
        for (Fe c : coeffs)
          if (c != 0) identically_zero = false;
        if (identically_zero)
          throw FiberBoundExceededError(
              "root condition degenerates to 0 = 0; fiber is not finite");
        for (std::uint64_t z = 0; z < f.q(); ++z) {
          Fe acc = 0;
          for (int d = (int)coeffs.size() - 1; d >= 0; --d)
            acc = f.add(f.mul(acc, (Fe)z), coeffs[d]);
          if (acc == 0) vals.push_back((Fe)z);
        }
      }
      if (vals.empty()) { empty = true; break; }
      slot_values.push_back(std::move(vals));
    }
    if (empty) continue;
    // cartesian product
    std::vector<Fe> tuple(block.slots.size(), 0);
    std::vector<std::size_t> idx(block.slots.size(), 0);
    for (;;) {
      for (std::size_t i = 0; i < idx.size(); ++i) tuple[i] = slot_values[i][idx[i]];
      fiber.insert(tuple);
      std::size_t i = 0;
      while (i < idx.size() && ++idx[i] == slot_values[i].size()) idx[i++] = 0;
      if (i == idx.size()) break;
    }
  }
  long long bound = spec.derived_bound();
  if (spec.declared_bound > 0 && (long long)fiber.size() > bound)
    throw FiberBoundExceededError("fiber size " + std::to_string(fiber.size()) +
                                  " exceeds declared bound " + std::to_string(bound));
  return {fiber.begin(), fiber.end()};
}

// Theta_sym^{phi,g,h}(a) = sum over the fiber of Psi(g(z)) chi(h(z)).
inline std::complex<double> theta_eval(const Field& f, const ThetaSpec& spec,
                                       const std::vector<Fe>& params,
                                       AdditiveCharacter psi,
                                       MultiplicativeCharacter chi) {
  std::complex<double> acc(0.0, 0.0);
  for (auto& z : theta_fiber(f, spec, params)) {
    Fe hv = eval_mult_row(f, spec.h, z);
    if (hv == 0) continue;  // chi(0) = 0 annihilates the term
    Fe gv = eval_linear_row(f, spec.g, z);
    RationalAngle angle = psi_eval(f, psi, gv) + chi_eval(f, chi, hv).angle;
    acc += angle.to_complex();
  }
  return acc;
}

// --- chi_sym: root sums with multiplicity ------------------------------------

// Sum of chi over the roots (with multiplicity) of
// x^n + a_1 x^{n-1} + ... + a_n.
inline std::complex<double> chi_sym(const Field& f, int n,
                                    const std::vector<Fe>& coeffs,
                                    MultiplicativeCharacter chi) {
  if ((int)coeffs.size() != n)
    throw ArityMismatchError("chi_sym needs exactly n coefficients");
  // monic coefficient vector, highest degree first
  std::vector<Fe> poly(n + 1);
  poly[0] = 1;
  for (int i = 0; i < n; ++i) poly[i + 1] = coeffs[i];
  std::complex<double> acc(0.0, 0.0);
  for (std::uint64_t r = 0; r < f.q(); ++r) {
    // multiplicity via repeated synthetic division
    std::vector<Fe> cur = poly;
    int mult = 0;
    for (;;) {
      std::vector<Fe> quot(cur.size() - 1);
      Fe rem = 0;
      for (std::size_t i = 0; i < cur.size(); ++i) {
        Fe v = f.add(f.mul(rem, (Fe)r), cur[i]);
        if (i + 1 < cur.size()) quot[i] = v;
        rem = v;
      }
      if (rem != 0 || quot.empty()) break;
      ++mult;
      cur = std::move(quot);
      if (cur.size() == 1) break;
    }
    if (mult > 0)
      acc += (double)mult * chi_complex(f, chi, (Fe)r);
  }
  return acc;
}

// --- the closure algebra ------------------------------------------------------

struct ThetaPadding {
  std::vector<Rat> q1, q2;
  Rat r1, r2, s1, s2;
};

enum class ThetaCombineKind { Product, Sum, Conjugate };

namespace detail {
inline Rat mult_row_value_rational(const std::vector<long long>& row,
                                   const std::vector<Rat>& q) {
  for (std::size_t i = 0; i < row.size(); ++i)
    if (q[i].is_zero()) return Rat(0);  // affine zero convention
  Rat acc(1);
  for (std::size_t i = 0; i < row.size(); ++i) {
    long long e = row[i];
    Rat base = q[i];
    if (e < 0) { base = base.inverse(); e = -e; }
    for (long long k = 0; k < e; ++k) acc = acc * base;
  }
  return acc;
}
inline Rat linear_row_value_rational(const std::vector<long long>& row,
                                     const std::vector<Rat>& q) {
  Rat acc(0);
  for (std::size_t i = 0; i < row.size(); ++i) acc = acc + Rat(row[i]) * q[i];
  return acc;
}
}  // namespace detail

inline ThetaSpec theta_combine(ThetaCombineKind kind, const ThetaSpec& s1,
                               const ThetaSpec* s2 = nullptr,
                               const ThetaPadding* padding = nullptr) {
  if (kind == ThetaCombineKind::Conjugate) {
    ThetaSpec out = s1;
    for (auto& g : out.g) g = -g;
    for (auto& h : out.h) h = -h;
    return out;
  }
  if (!s2) throw Error("product/sum combination needs a second spec");
  if (s1.param_arity != s2->param_arity)
    throw ArityMismatchError("combined theta specs must share the parameter arity");

  if (kind == ThetaCombineKind::Product) {
    ThetaSpec out;
    out.param_arity = s1.param_arity;
    out.fiber_arity = s1.fiber_arity + s2->fiber_arity;
    for (auto& b1 : s1.blocks)
      for (auto& b2 : s2->blocks) {
        ThetaSpec::Block blk;
        blk.slots = b1.slots;
        blk.slots.insert(blk.slots.end(), b2.slots.begin(), b2.slots.end());
        out.blocks.push_back(std::move(blk));
      }
    out.g = s1.g;
    out.g.insert(out.g.end(), s2->g.begin(), s2->g.end());
    out.h = s1.h;
    out.h.insert(out.h.end(), s2->h.begin(), s2->h.end());
    return out;
  }

  // Sum: X = (X1 x {(q2, r2, s2)}) u ({q1} x X2 x {(r1, s1)}) with
  // alpha = g1(z1) + g2(z2) + v and beta = h1(z1) h2(z2) w.
  if (!padding) throw InvalidPaddingError("sum combination needs padding tuples");
  const ThetaPadding& pad = *padding;
  if ((int)pad.q1.size() != s1.fiber_arity || (int)pad.q2.size() != s2->fiber_arity)
    throw InvalidPaddingError("padding tuples must match the fiber arities");
  for (auto& v : pad.q1)
    if (v.is_zero()) throw InvalidPaddingError("q1 coordinates must be nonzero");
  for (auto& v : pad.q2)
    if (v.is_zero()) throw InvalidPaddingError("q2 coordinates must be nonzero");
  if (!(detail::linear_row_value_rational(s1.g, pad.q1) == -pad.r1))
    throw InvalidPaddingError("g(q1) must equal -r1");
  if (!(detail::linear_row_value_rational(s2->g, pad.q2) == -pad.r2))
    throw InvalidPaddingError("g'(q2) must equal -r2");
  if (pad.s1.is_zero() || pad.s2.is_zero())
    throw InvalidPaddingError("s1, s2 must be nonzero");
  if (!(detail::mult_row_value_rational(s1.h, pad.q1) == pad.s1.inverse()))
    throw InvalidPaddingError("h(q1) must equal s1^-1");
  if (!(detail::mult_row_value_rational(s2->h, pad.q2) == pad.s2.inverse()))
    throw InvalidPaddingError("h'(q2) must equal s2^-1");
  if (pad.s1 == pad.s2) throw InvalidPaddingError("s1 and s2 must differ");

  ThetaSpec out;
  out.param_arity = s1.param_arity;
  out.fiber_arity = s1.fiber_arity + s2->fiber_arity + 2;
  auto const_slot = [](const Rat& v) {
    ThetaSpec::Slot s;
    s.is_const = true;
    s.constant = v;
    return s;
  };
  for (auto& b1 : s1.blocks) {
    ThetaSpec::Block blk;
    blk.slots = b1.slots;
    for (auto& v : pad.q2) blk.slots.push_back(const_slot(v));
    blk.slots.push_back(const_slot(pad.r2));
    blk.slots.push_back(const_slot(pad.s2));
    out.blocks.push_back(std::move(blk));
  }
  for (auto& b2 : s2->blocks) {
    ThetaSpec::Block blk;
    for (auto& v : pad.q1) blk.slots.push_back(const_slot(v));
    blk.slots.insert(blk.slots.end(), b2.slots.begin(), b2.slots.end());
    blk.slots.push_back(const_slot(pad.r1));
    blk.slots.push_back(const_slot(pad.s1));
    out.blocks.push_back(std::move(blk));
  }
  out.g = s1.g;
  out.g.insert(out.g.end(), s2->g.begin(), s2->g.end());
  out.g.push_back(1);  // v
  out.g.push_back(0);  // w
  out.h = s1.h;
  out.h.insert(out.h.end(), s2->h.begin(), s2->h.end());
  out.h.push_back(0);  // v
  out.h.push_back(1);  // w
  return out;
}

// --- kappa --------------------------------------------------------------------

// kappa_{P,Q}(a): the common value of Q on the roots of P(a, .), or 0 when
// there is no root or the values disagree.
inline Fe kappa_eval(const Field& f, const KappaSpec& spec,
                     const std::vector<Fe>& params) {
  if ((int)params.size() != spec.param_arity)
    throw ArityMismatchError("kappa parameter tuple has wrong length");
  int yi = spec.param_arity;
  std::vector<Fe> pt(params);
  pt.push_back(0);
  bool found = false;
  Fe value = 0;
  for (std::uint64_t y = 0; y < f.q(); ++y) {
    pt[yi] = (Fe)y;
    if (eval_poly(f, spec.P, pt) != 0) continue;
    Fe qv = eval_poly(f, spec.Q, pt);
    if (!found) {
      found = true;
      value = qv;
    } else if (qv != value) {
      return 0;  // inconsistent values
    }
  }
  return found ? value : 0;
}

}  // namespace charlab
