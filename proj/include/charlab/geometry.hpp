#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "charlab/ast.hpp"
#include "charlab/theta.hpp"

namespace charlab {

// An affine algebraic set cut out by integer polynomial equations; optional
// trailing parameter slots are bound at enumeration time.
struct AffineVariety {
  std::vector<PolyExpr> equations;  // arity = ambient_dim + param_arity
  int ambient_dim = 1;
  int param_arity = 0;

  static AffineVariety affine_space(int n) {
    AffineVariety v;
    v.ambient_dim = n;
    return v;
  }
};

struct PointSet {
  std::vector<std::vector<Fe>> points;  // sorted canonically
  const Field* field = nullptr;
};

struct EnumerationResult {
  PointSet all;       // C(F_q)
  PointSet nonzero;   // C'(F_q): all coordinates nonzero
  bool is_zero_degenerate = false;  // C'(F_q) empty at this q
};

// Exhaustive rational-point enumeration with a candidate budget. When some
// equation is univariate in the last variable given a prefix, the prefix
// fibering keeps the scan order but allows the early equation check.
inline EnumerationResult enumerate_points(const AffineVariety& V, const Field& f,
                                          const std::vector<Fe>& params = {},
                                          std::uint64_t budget = 100000000ull) {
  if ((int)params.size() != V.param_arity)
    throw ArityMismatchError("variety parameter tuple has wrong length");
  int n = V.ambient_dim;
  std::uint64_t need = 1;
  for (int i = 0; i < n; ++i) {
    need *= f.q();
    if (need > budget) throw BudgetExceededError(need, budget);
  }
  EnumerationResult out;
  out.all.field = &f;
  out.nonzero.field = &f;
  std::vector<Fe> pt(n + V.param_arity, 0);
  for (int i = 0; i < V.param_arity; ++i) pt[n + i] = params[i];
  for (std::uint64_t code = 0; code < need; ++code) {
    std::uint64_t c = code;
    bool nonzero_pt = true;
    for (int i = 0; i < n; ++i) {
      pt[i] = (Fe)(c % f.q());
      nonzero_pt &= pt[i] != 0;
      c /= f.q();
    }
    bool on = true;
    for (auto& eq : V.equations)
      if (eval_poly(f, eq, pt) != 0) { on = false; break; }
    if (!on) continue;
    std::vector<Fe> coords(pt.begin(), pt.begin() + n);
    out.all.points.push_back(coords);
    if (nonzero_pt) out.nonzero.points.push_back(coords);
  }
  std::sort(out.all.points.begin(), out.all.points.end());
  std::sort(out.nonzero.points.begin(), out.nonzero.points.end());
  out.is_zero_degenerate = out.nonzero.points.empty();
  // re-verify the defining equations on every returned point
  for (auto& q : out.all.points) {
    std::vector<Fe> full(q);
    for (int i = 0; i < V.param_arity; ++i) full.push_back(params[i]);
    for (auto& eq : V.equations)
      if (eval_poly(f, eq, full) != 0)
        throw Error("internal: enumerated point violates an equation");
  }
  return out;
}

enum class ContainmentMode { Hyperplane, Coset };

struct ContainmentWitness {
  std::vector<long long> coeffs;  // s-bar or t-bar, |.|_inf <= height
  Fe value = 0;                   // the common value f
};

// Searches for a rational hyperplane (sum s_i x_i = f) or multiplicative
// coset (prod x_i^{t_i} = f) of height <= m containing every point.
// Coset mode works through discrete logarithms: the candidate check is a
// dot product with the dlog vectors mod q-1.
inline std::optional<ContainmentWitness> containment_search(const PointSet& pts,
                                                            long long height,
                                                            ContainmentMode mode) {
  if (pts.points.empty() || pts.field == nullptr)
    throw Error("containment_search requires a nonempty point set");
  const Field& f = *pts.field;
  int n = (int)pts.points[0].size();

  std::vector<std::vector<long long>> dlogs;
  if (mode == ContainmentMode::Coset) {
    for (auto& p : pts.points) {
      std::vector<long long> d(n);
      for (int i = 0; i < n; ++i) {
        if (p[i] == 0)
          throw Error("coset containment requires nonzero coordinates");
        d[i] = f.dlog(p[i]);
      }
      dlogs.push_back(std::move(d));
    }
  }

  std::vector<long long> s(n, -height);
  long long m = (long long)f.q() - 1;
  for (;;) {
    bool all_zero = true;
    for (long long v : s) all_zero &= v == 0;
    if (!all_zero) {
      if (mode == ContainmentMode::Hyperplane) {
        Fe first = 0;
        bool ok = true;
        for (std::size_t k = 0; k < pts.points.size(); ++k) {
          Fe acc = 0;
          for (int i = 0; i < n; ++i)
            if (s[i] != 0) acc = f.add(acc, f.mul(f.from_int(s[i]), pts.points[k][i]));
          if (k == 0) first = acc;
          else if (acc != first) { ok = false; break; }
        }
        if (ok) return ContainmentWitness{s, first};
      } else {
        long long first = 0;
        bool ok = true;
        for (std::size_t k = 0; k < dlogs.size(); ++k) {
          __int128 acc = 0;
          for (int i = 0; i < n; ++i) acc += (__int128)s[i] * dlogs[k][i];
          long long r = (long long)(((acc % m) + m) % m);
          if (k == 0) first = r;
          else if (r != first) { ok = false; break; }
        }
        if (ok) {
          // report the common value prod x_i^{t_i} = generator^first
          return ContainmentWitness{s, f.exp_of(first)};
        }
      }
    }
    // next candidate vector in [-height, height]^n
    int i = 0;
    while (i < n && s[i] == height) s[i++] = -height;
    if (i == n) return std::nullopt;
    ++s[i];
  }
}

struct LangWeilReport {
  std::uint64_t q = 0;
  std::uint64_t count = 0;
  double deviation = 0.0;  // |count - q| / sqrt(q)
};

inline LangWeilReport lang_weil_check(const AffineVariety& V, const Field& f,
                                      const std::vector<Fe>& params = {},
                                      std::uint64_t budget = 100000000ull) {
  EnumerationResult r = enumerate_points(V, f, params, budget);
  LangWeilReport rep;
  rep.q = f.q();
  rep.count = r.all.points.size();
  double diff = (double)rep.count - (double)f.q();
  rep.deviation = std::abs(diff) / std::sqrt((double)f.q());
  return rep;
}

}  // namespace charlab
