#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#if defined(__AVX2__) || defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "charlab/angle.hpp"
#include "charlab/ast.hpp"
#include "charlab/characters.hpp"
#include "charlab/errors.hpp"
#include "charlab/field.hpp"
#include "charlab/primes.hpp"

namespace charlab {

// A finite sequence of points on [0,1)^d. When every coordinate is an exact
// rational angle the d=1 discrepancy is computed in exact arithmetic.
struct TorusSequence {
  int dim = 1;
  std::vector<std::vector<double>> points;
  std::optional<std::vector<std::vector<RationalAngle>>> exact;

  static TorusSequence kronecker(const std::vector<double>& alpha, int n) {
    TorusSequence X;
    X.dim = (int)alpha.size();
    X.points.reserve(n);
    for (int i = 1; i <= n; ++i) {
      std::vector<double> p(alpha.size());
      for (std::size_t j = 0; j < alpha.size(); ++j) {
        double v = std::fmod(i * alpha[j], 1.0);
        if (v < 0) v += 1.0;
        p[j] = v;
      }
      X.points.push_back(std::move(p));
    }
    return X;
  }

  static TorusSequence from_angles(const std::vector<std::vector<RationalAngle>>& pts) {
    TorusSequence X;
    X.dim = pts.empty() ? 1 : (int)pts[0].size();
    for (auto& p : pts) {
      std::vector<double> d(p.size());
      for (std::size_t j = 0; j < p.size(); ++j) d[j] = p[j].value();
      X.points.push_back(std::move(d));
    }
    X.exact = pts;
    return X;
  }
};

namespace detail {

// ---- exact 1d extreme discrepancy -------------------------------------------

// Shared scheme: D+ over closed-limit boxes with corners at sample values,
// D- over open-limit boxes with corners at sample values or {0,1}.
template <typename Num>
Num discrepancy_1d_impl(std::vector<Num> vals, Num zero, Num one,
                        const std::function<Num(long long, long long)>& frac) {
  std::sort(vals.begin(), vals.end());
  long long n = (long long)vals.size();
  // distinct values with cumulative counts
  std::vector<Num> v;
  std::vector<long long> cum;  // count of points <= v[k]
  for (long long i = 0; i < n; ++i) {
    if (!v.empty() && vals[i] == v.back()) ++cum.back();
    else { v.push_back(vals[i]); cum.push_back(cum.empty() ? 1 : cum.back() + 1); }
  }
  std::size_t K = v.size();

  Num dplus = zero;
  Num best_left = v[0] - zero;  // max over a<=b of (v_a - C(a-1)/n), at a=0: v0 - 0
  for (std::size_t b = 0; b < K; ++b) {
    if (b > 0) {
      Num cand = v[b] - frac(cum[b - 1], n);
      if (best_left < cand) best_left = cand;
    }
    Num val = frac(cum[b], n) - v[b] + best_left;
    if (dplus < val) dplus = val;
  }

  // D-: max over u < w of (w - u) - (C<(w) - C<=(u))/n
  Num dminus = zero;
  Num best_u = zero;  // u = 0 sentinel: C<=(0)/n - 0, counting points at 0
  {
    long long zeros = 0;
    for (std::size_t k = 0; k < K && v[k] == zero; ++k) zeros = cum[k];
    best_u = frac(zeros, n);
  }
  for (std::size_t w = 0; w < K; ++w) {
    Num cand = v[w] - frac(w == 0 ? 0 : cum[w - 1], n) + best_u;
    if (dminus < cand) dminus = cand;
    Num u_cand = frac(cum[w], n) - v[w];
    if (best_u < u_cand) best_u = u_cand;
  }
  Num end = one - frac(cum[K - 1], n) + best_u;
  if (dminus < end) dminus = end;

  Num out = dplus < dminus ? dminus : dplus;
  return out < zero ? zero : out;
}

inline double discrepancy_1d(const std::vector<double>& xs) {
  return discrepancy_1d_impl<double>(
      xs, 0.0, 1.0, [](long long a, long long b) { return (double)a / (double)b; });
}

inline Rat discrepancy_1d_exact(const std::vector<RationalAngle>& xs) {
  std::vector<Rat> vals;
  for (auto& a : xs) vals.push_back(a.to_rat());
  return discrepancy_1d_impl<Rat>(vals, Rat(0), Rat(1), [](long long a, long long b) {
    return Rat(a, b);
  });
}

// ---- exact 2d extreme discrepancy ---------------------------------------------

// The slab sweep computes the same value the corner-candidate enumeration
// defines: for every pair of y-values (slab), the best x-interval reduces to
// running prefix extrema. The inner scan is the hot path.

// Fused slab scan: one pass computes the D+ candidate
//   max_j ( B_j + 1/n - min_{i<=j} B_i ),   B_j = j/n - hplus x_j
// and the D- candidate
//   max_w ( hminus w - C<(w)/n + max_{u<w} (C<=(u)/n - hminus u) )
// with the u = 0 and w = 1 sentinels folded in.
struct SlabScan {
  float dplus;
  float dminus;
};

inline SlabScan scan_slab(const float* xs, long long m, float inv_n, float hplus,
                          float hminus) {
  float best_p = -1e30f, best_m = -1e30f;
  float carry_min = 1e30f;  // running min of B
  float carry_max = 0.0f;   // running max of L = (j+1)/n - hminus x (u = 0 sentinel)
  long long j = 0;
#if defined(__AVX512F__)
  if (m >= 32) {
    const __m512i idx1 = _mm512_set_epi32(14, 13, 12, 11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0, 0);
    const __m512i idx2 = _mm512_set_epi32(13, 12, 11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0, 0, 0);
    const __m512i idx4 = _mm512_set_epi32(11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0, 0, 0, 0, 0);
    const __m512i idx8 = _mm512_set_epi32(7, 6, 5, 4, 3, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0);
    const __mmask16 k1 = 0xFFFE, k2 = 0xFFFC, k4 = 0xFFF0, k8 = 0xFF00;
    const __m512i lane = _mm512_set_epi32(15, 14, 13, 12, 11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0);
    const __m512i bcast15 = _mm512_set1_epi32(15);
    const __m512 vhp = _mm512_set1_ps(hplus);
    const __m512 vhm = _mm512_set1_ps(hminus);
    const __m512 v1n = _mm512_set1_ps(inv_n);
    __m512 vcarry_min = _mm512_set1_ps(1e30f);
    __m512 vcarry_max = _mm512_setzero_ps();
    __m512 vbest_p = _mm512_set1_ps(-1e30f);
    __m512 vbest_m = _mm512_set1_ps(-1e30f);
    for (; j + 16 <= m; j += 16) {
      __m512 vj = _mm512_mul_ps(
          _mm512_cvtepi32_ps(_mm512_add_epi32(_mm512_set1_epi32((int)j), lane)),
          _mm512_set1_ps(inv_n));
      __m512 x = _mm512_loadu_ps(xs + j);
      // D+: inclusive prefix-min of B with the lane-wise carry
      __m512 b = _mm512_fnmadd_ps(vhp, x, vj);
      __m512 t = _mm512_mask_min_ps(b, k1, b, _mm512_permutexvar_ps(idx1, b));
      t = _mm512_mask_min_ps(t, k2, t, _mm512_permutexvar_ps(idx2, t));
      t = _mm512_mask_min_ps(t, k4, t, _mm512_permutexvar_ps(idx4, t));
      t = _mm512_mask_min_ps(t, k8, t, _mm512_permutexvar_ps(idx8, t));
      __m512 pm = _mm512_min_ps(t, vcarry_min);
      vbest_p = _mm512_max_ps(vbest_p, _mm512_sub_ps(_mm512_add_ps(b, v1n), pm));
      vcarry_min = _mm512_permutexvar_ps(bcast15, pm);
      // D-: exclusive prefix-max of L, carry entering lane 0
      __m512 hx = _mm512_mul_ps(vhm, x);
      __m512 l = _mm512_sub_ps(_mm512_add_ps(vj, v1n), hx);
      __m512 u = _mm512_mask_max_ps(l, k1, l, _mm512_permutexvar_ps(idx1, l));
      u = _mm512_mask_max_ps(u, k2, u, _mm512_permutexvar_ps(idx2, u));
      u = _mm512_mask_max_ps(u, k4, u, _mm512_permutexvar_ps(idx4, u));
      u = _mm512_mask_max_ps(u, k8, u, _mm512_permutexvar_ps(idx8, u));
      __m512 pmc = _mm512_max_ps(u, vcarry_max);
      __m512 exc = _mm512_mask_mov_ps(vcarry_max, k1, _mm512_permutexvar_ps(idx1, pmc));
      __m512 w = _mm512_sub_ps(hx, vj);
      vbest_m = _mm512_max_ps(vbest_m, _mm512_add_ps(w, exc));
      vcarry_max = _mm512_permutexvar_ps(bcast15, pmc);
    }
    best_p = _mm512_reduce_max_ps(vbest_p);
    best_m = _mm512_reduce_max_ps(vbest_m);
    carry_min = _mm512_reduce_min_ps(vcarry_min);
    carry_max = _mm512_reduce_max_ps(vcarry_max);
  }
#elif defined(__AVX2__)
  if (m >= 16) {
    const __m256i sh1 = _mm256_setr_epi32(0, 0, 1, 2, 3, 4, 5, 6);
    const __m256i sh2 = _mm256_setr_epi32(0, 0, 0, 1, 2, 3, 4, 5);
    const __m256i sh4 = _mm256_setr_epi32(0, 0, 0, 0, 0, 1, 2, 3);
    const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
    const __m256 vhp = _mm256_set1_ps(hplus);
    const __m256 vhm = _mm256_set1_ps(hminus);
    const __m256 v1n = _mm256_set1_ps(inv_n);
    const __m256 vbig = _mm256_set1_ps(1e30f);
    const __m256 vsmall = _mm256_set1_ps(-1e30f);
    __m256 vcarry_min = vbig;
    __m256 vcarry_max = _mm256_setzero_ps();
    __m256 vbest_p = vsmall, vbest_m = vsmall;
    const __m256i bcast7 = _mm256_set1_epi32(7);
    for (; j + 8 <= m; j += 8) {
      __m256 vj = _mm256_mul_ps(
          _mm256_cvtepi32_ps(_mm256_add_epi32(_mm256_set1_epi32((int)j), lane)),
          _mm256_set1_ps(inv_n));
      __m256 x = _mm256_loadu_ps(xs + j);
      __m256 b = _mm256_fnmadd_ps(vhp, x, vj);
      __m256 t = _mm256_min_ps(b, _mm256_blend_ps(_mm256_permutevar8x32_ps(b, sh1), vbig, 0x01));
      t = _mm256_min_ps(t, _mm256_blend_ps(_mm256_permutevar8x32_ps(t, sh2), vbig, 0x03));
      t = _mm256_min_ps(t, _mm256_blend_ps(_mm256_permutevar8x32_ps(t, sh4), vbig, 0x0F));
      __m256 pm = _mm256_min_ps(t, vcarry_min);
      vbest_p = _mm256_max_ps(vbest_p, _mm256_sub_ps(_mm256_add_ps(b, v1n), pm));
      vcarry_min = _mm256_permutevar8x32_ps(pm, bcast7);
      __m256 hx = _mm256_mul_ps(vhm, x);
      __m256 l = _mm256_sub_ps(_mm256_add_ps(vj, v1n), hx);
      __m256 u = _mm256_max_ps(l, _mm256_blend_ps(_mm256_permutevar8x32_ps(l, sh1), vsmall, 0x01));
      u = _mm256_max_ps(u, _mm256_blend_ps(_mm256_permutevar8x32_ps(u, sh2), vsmall, 0x03));
      u = _mm256_max_ps(u, _mm256_blend_ps(_mm256_permutevar8x32_ps(u, sh4), vsmall, 0x0F));
      __m256 pmc = _mm256_max_ps(u, vcarry_max);
      __m256 exc = _mm256_blend_ps(_mm256_permutevar8x32_ps(pmc, sh1), vcarry_max, 0x01);
      __m256 w = _mm256_sub_ps(hx, vj);
      vbest_m = _mm256_max_ps(vbest_m, _mm256_add_ps(w, exc));
      vcarry_max = _mm256_permutevar8x32_ps(pmc, bcast7);
    }
    alignas(32) float tmp[8];
    _mm256_store_ps(tmp, vbest_p);
    for (int k = 0; k < 8; ++k) best_p = std::max(best_p, tmp[k]);
    _mm256_store_ps(tmp, vbest_m);
    for (int k = 0; k < 8; ++k) best_m = std::max(best_m, tmp[k]);
    _mm256_store_ps(tmp, vcarry_min);
    for (int k = 0; k < 8; ++k) carry_min = std::min(carry_min, tmp[k]);
    _mm256_store_ps(tmp, vcarry_max);
    for (int k = 0; k < 8; ++k) carry_max = std::max(carry_max, tmp[k]);
  }
#endif
  for (; j < m; ++j) {
    float b = (float)j * inv_n - hplus * xs[j];
    carry_min = std::min(carry_min, b);
    best_p = std::max(best_p, b + inv_n - carry_min);
    float w = hminus * xs[j] - (float)j * inv_n;
    best_m = std::max(best_m, w + carry_max);
    carry_max = std::max(carry_max, (float)(j + 1) * inv_n - hminus * xs[j]);
  }
  // D- right sentinel w = 1
  best_m = std::max(best_m, hminus - (float)m * inv_n + carry_max);
  return {best_p, best_m};
}

inline double discrepancy_2d(const std::vector<std::vector<double>>& pts) {
  long long n = (long long)pts.size();
  if (n == 0) return 0.0;
  // group by distinct y ascending; within a group keep xs sorted
  std::vector<std::pair<double, double>> yx(n);
  for (long long i = 0; i < n; ++i) yx[i] = {pts[i][1], pts[i][0]};
  std::sort(yx.begin(), yx.end());
  std::vector<double> vy;           // distinct ys
  std::vector<std::vector<float>> gx;  // their xs, sorted
  for (auto& [y, x] : yx) {
    if (vy.empty() || y != vy.back()) {
      vy.push_back(y);
      gx.emplace_back();
    }
    gx.back().push_back((float)x);
  }
  for (auto& g : gx) std::sort(g.begin(), g.end());
  std::size_t K = vy.size();
  float inv_n = 1.0f / (float)n;

  double best = 0.0;
  // boxes whose y-range contains no sample y
  {
    double prev = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      best = std::max(best, vy[k] - prev);
      prev = vy[k];
    }
    best = std::max(best, 1.0 - prev);
  }

  std::vector<float> slab;
  slab.reserve(n);
  for (std::size_t c = 0; c < K; ++c) {
    slab.clear();
    for (std::size_t d = c; d < K; ++d) {
      for (float x : gx[d])
        slab.insert(std::upper_bound(slab.begin(), slab.end(), x), x);
      long long m = (long long)slab.size();
      float hplus = (float)(vy[d] - vy[c]);
      float hminus = (float)((d + 1 < K ? vy[d + 1] : 1.0) -
                             (c > 0 ? vy[c - 1] : 0.0));
      SlabScan scan = scan_slab(slab.data(), m, inv_n, hplus, hminus);
      best = std::max(best, (double)scan.dplus);
      best = std::max(best, (double)scan.dminus);
    }
  }
  return std::max(best, 0.0);
}

// ---- grid approximation for d >= 3 ---------------------------------------------

inline double discrepancy_grid(const std::vector<std::vector<double>>& pts, int d,
                               int resolution) {
  long long n = (long long)pts.size();
  std::size_t cells = 1;
  for (int i = 0; i < d; ++i) cells *= (std::size_t)resolution;
  std::vector<long long> grid(cells, 0);
  std::vector<std::size_t> stride(d, 1);
  for (int i = 1; i < d; ++i) stride[i] = stride[i - 1] * resolution;
  for (auto& p : pts) {
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) {
      int c = std::min(resolution - 1, (int)(p[i] * resolution));
      idx += stride[i] * (std::size_t)c;
    }
    ++grid[idx];
  }
  // prefix sums along each axis
  for (int axis = 0; axis < d; ++axis) {
    for (std::size_t i = 0; i < cells; ++i) {
      std::size_t coord = (i / stride[axis]) % resolution;
      if (coord > 0) grid[i] += grid[i - stride[axis]];
    }
  }
  auto box_count = [&](const std::vector<int>& lo, const std::vector<int>& hi) {
    // inclusion-exclusion over grid-anchored corners; lo/hi are exclusive
    // prefix indices in [0, resolution]
    long long acc = 0;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      std::size_t idx = 0;
      int sign = 1;
      bool skip = false;
      for (int i = 0; i < d; ++i) {
        int edge = (mask >> i) & 1 ? lo[i] : hi[i];
        if (edge == 0) { skip = true; break; }
        if ((mask >> i) & 1) sign = -sign;
        idx += stride[i] * (std::size_t)(edge - 1);
      }
      if (!skip) acc += sign * grid[idx];
    }
    return acc;
  };
  double best = 0.0;
  std::vector<int> lo(d, 0), hi(d, 0);
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      double vol = 1.0;
      for (int i = 0; i < d; ++i) vol *= (double)(hi[i] - lo[i]) / resolution;
      double frac = (double)box_count(lo, hi) / (double)n;
      best = std::max(best, std::abs(frac - vol));
      return;
    }
    for (lo[axis] = 0; lo[axis] < resolution; ++lo[axis])
      for (hi[axis] = lo[axis] + 1; hi[axis] <= resolution; ++hi[axis]) rec(axis + 1);
  };
  rec(0);
  return best;
}

}  // namespace detail

// Extreme discrepancy sup over axis-aligned half-open boxes. Exact for
// d <= 2 (corner-candidate semantics); grid approximation with the given
// resolution for d >= 3.
inline double discrepancy(const TorusSequence& X, int grid_resolution = 16) {
  if (X.points.empty()) return 0.0;
  if (X.dim == 1) {
    if (X.exact) {
      std::vector<RationalAngle> xs;
      for (auto& p : *X.exact) xs.push_back(p[0]);
      return detail::discrepancy_1d_exact(xs).to_double();
    }
    std::vector<double> xs;
    for (auto& p : X.points) xs.push_back(p[0]);
    return detail::discrepancy_1d(xs);
  }
  if (X.dim == 2) return detail::discrepancy_2d(X.points);
  return detail::discrepancy_grid(X.points, X.dim, grid_resolution);
}

// Exact rational discrepancy for d = 1 sequences of rational angles.
inline Rat discrepancy_exact_1d(const std::vector<RationalAngle>& xs) {
  return detail::discrepancy_1d_exact(xs);
}

// ---- Erdos-Turan-Koksma ----------------------------------------------------------

struct ETKParams {
  long long H = 16;
  double C_d = 0.0;  // 0 = default (3/2)^d; the constant is configurable since
                     // no specific value is attached to the inequality
};

inline double etk_default_constant(int d) { return std::pow(1.5, d); }

// C_d (1/H + sum_{0<|h|_inf<=H} |S(h)|/(n z(h))) with S(h) the exponential sum.
inline double etk_bound(const TorusSequence& X, ETKParams params) {
  if (params.H < 1) throw Error("ETK requires H >= 1");
  int d = X.dim;
  long long H = params.H;
  double C = params.C_d > 0 ? params.C_d : etk_default_constant(d);
  std::size_t n = X.points.size();
  if (n == 0) return C / (double)H;
  const double tau = 2.0 * std::numbers::pi;
  double sum = 0.0;

  if (d == 1) {
    std::vector<std::complex<double>> u(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) u[i] = std::polar(1.0, tau * X.points[i][0]);
    for (long long h = 1; h <= H; ++h) {
      std::complex<double> s(0, 0);
      for (std::size_t i = 0; i < n; ++i) {
        w[i] *= u[i];
        s += w[i];
      }
      // +-h have equal modulus
      sum += 2.0 * std::abs(s) / ((double)n * (double)h);
    }
  } else if (d == 2) {
    std::vector<std::complex<double>> u(n), v(n), U(n, 1.0), W(n);
    std::vector<std::complex<double>> vneg(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = std::polar(1.0, tau * X.points[i][0]);
      v[i] = std::polar(1.0, tau * X.points[i][1]);
      for (long long k = 0; k < H; ++k) vneg[i] *= std::conj(v[i]);
    }
    auto z = [](long long a, long long b) {
      return (double)(std::max(1ll, std::llabs(a)) * std::max(1ll, std::llabs(b)));
    };
    // h1 = 0, h2 > 0 (conjugate pairs double)
    {
      std::vector<std::complex<double>> w(n, 1.0);
      for (long long h2 = 1; h2 <= H; ++h2) {
        std::complex<double> s(0, 0);
        for (std::size_t i = 0; i < n; ++i) {
          w[i] *= v[i];
          s += w[i];
        }
        sum += 2.0 * std::abs(s) / ((double)n * z(0, h2));
      }
    }
    // h1 > 0, all h2 (conjugate pairs with h1 < 0 double)
    for (long long h1 = 1; h1 <= H; ++h1) {
      for (std::size_t i = 0; i < n; ++i) U[i] *= u[i];
      for (std::size_t i = 0; i < n; ++i) W[i] = U[i] * vneg[i];
      for (long long h2 = -H; h2 <= H; ++h2) {
        std::complex<double> s(0, 0);
        for (std::size_t i = 0; i < n; ++i) {
          s += W[i];
          W[i] *= v[i];
        }
        sum += 2.0 * std::abs(s) / ((double)n * z(h1, h2));
      }
    }
  } else {
    // generic dimension: direct enumeration
    std::vector<long long> h(d, -H);
    for (;;) {
      bool zero = true;
      for (long long c : h) zero &= c == 0;
      if (!zero) {
        double zh = 1.0;
        for (long long c : h) zh *= (double)std::max(1ll, std::llabs(c));
        std::complex<double> s(0, 0);
        for (auto& p : X.points) {
          double phase = 0;
          for (int i = 0; i < d; ++i) phase += (double)h[i] * p[i];
          s += std::polar(1.0, tau * phase);
        }
        sum += std::abs(s) / ((double)n * zh);
      }
      int i = 0;
      while (i < d && h[i] == H) h[i++] = -H;
      if (i == d) break;
      ++h[i];
    }
  }
  return C * (1.0 / (double)H + sum);
}

// ---- exponent search -----------------------------------------------------------

struct TorusBox {
  // half-open [lo, hi) per coordinate, rational endpoints in [0, 1]
  std::vector<std::pair<Rat, Rat>> sides;

  double volume() const {
    double v = 1.0;
    for (auto& [lo, hi] : sides) v *= (hi - lo).to_double();
    return v;
  }
  bool contains(const std::vector<RationalAngle>& angles) const {
    for (std::size_t i = 0; i < sides.size(); ++i) {
      Rat a = angles[i].to_rat();
      if (a < sides[i].first || !(a < sides[i].second)) return false;
    }
    return true;
  }
};

struct ExponentSearchResult {
  bool found = false;
  long long l = 0;
  std::vector<RationalAngle> achieved;
  std::vector<long long> orders;
  long long predicted_horizon = 0;  // ETK-style diagnostic when the search fails
};

// Smallest l <= l_max with l = f (mod R), gamma^l componentwise in the box,
// and max coordinate order >= K. The independence precheck rejects angle
// tuples with an integral relation of height <= H_check.
inline ExponentSearchResult exponent_search(const std::vector<RationalAngle>& gammas,
                                            const TorusBox& box, long long R,
                                            long long f, long long K,
                                            long long l_max,
                                            long long H_check = 8) {
  int d = (int)gammas.size();
  if (R < 1 || f < 1 || f > R) throw Error("exponent search requires 1 <= f <= R");
  if ((int)box.sides.size() != d)
    throw ArityMismatchError("box dimension must match the angle tuple");

  // precheck: no nonzero alpha with |alpha|_inf <= H_check and
  // sum alpha_i gamma_i = 0 mod 1; scanned by increasing height so a failure
  // reports a minimal witness, sign-normalized since alpha and -alpha carry
  // the same relation
  for (long long hgt = 1; hgt <= H_check; ++hgt) {
    std::vector<long long> alpha(d, -hgt);
    for (;;) {
      long long inf = 0;
      for (long long a : alpha) inf = std::max(inf, std::llabs(a));
      if (inf == hgt) {
        RationalAngle acc(0, 1);
        for (int i = 0; i < d; ++i)
          if (alpha[i] != 0) acc = acc + gammas[i].scaled(alpha[i]);
        if (acc.num == 0) {
          std::vector<long long> witness = alpha;
          for (long long a : witness) {
            if (a == 0) continue;
            if (a < 0)
              for (auto& w : witness) w = -w;
            break;
          }
          throw IndependencePrecheckFailedError(witness);
        }
      }
      int i = 0;
      while (i < d && alpha[i] == hgt) alpha[i++] = -hgt;
      if (i == d) break;
      ++alpha[i];
    }
  }

  // incremental exact stepping: angle_i(l) = l num_i mod den_i
  std::vector<long long> num(d), den(d), cur(d), step(d);
  for (int i = 0; i < d; ++i) {
    num[i] = gammas[i].num;
    den[i] = gammas[i].den;
    cur[i] = (__int128)f * num[i] % den[i];
    step[i] = (__int128)R * num[i] % den[i];
  }
  auto in_box = [&](int i) {
    const Rat& lo = box.sides[i].first;
    const Rat& hi = box.sides[i].second;
    __int128 lhs = (__int128)cur[i] * lo.den;
    if (lhs < (__int128)lo.num * den[i]) return false;
    lhs = (__int128)cur[i] * hi.den;
    return lhs < (__int128)hi.num * den[i];
  };
  ExponentSearchResult out;
  for (long long l = f; l <= l_max; l += R) {
    bool ok = true;
    for (int i = 0; i < d && ok; ++i) ok = in_box(i);
    if (ok) {
      long long max_order = 0;
      std::vector<RationalAngle> angles;
      std::vector<long long> orders;
      for (int i = 0; i < d; ++i) {
        RationalAngle a(cur[i], den[i]);
        angles.push_back(a);
        orders.push_back(a.order());
        max_order = std::max(max_order, a.order());
      }
      if (max_order >= K) {
        // re-verify from scratch
        for (int i = 0; i < d; ++i)
          if (!(gammas[i].scaled(l) == angles[i]))
            throw Error("internal: exponent search verification failed");
        if (!box.contains(angles))
          throw Error("internal: exponent search box verification failed");
        out.found = true;
        out.l = l;
        out.achieved = angles;
        out.orders = orders;
        return out;
      }
    }
    for (int i = 0; i < d; ++i) {
      cur[i] += step[i];
      if (cur[i] >= den[i]) cur[i] -= den[i];
    }
  }
  double vol = box.volume();
  double Cd = etk_default_constant(d);
  double Hstar = vol > 0 ? std::ceil(2.0 * Cd / vol) : (double)l_max;
  out.predicted_horizon = (long long)std::min(9.0e18, (double)R * Hstar * Hstar);
  return out;
}

// ---- witness search -------------------------------------------------------------

struct WitnessRecord {
  long long p = 0;
  long long root = 0;        // chosen root b of the minimal polynomial mod p
  long long add_twist = 0;   // Psi_p = standard^r
  long long mult_exp = 0;    // chi_p = (full-order character)^l
  std::vector<RationalAngle> gen_angles;
  std::vector<RationalAngle> basis_angles;
  bool verified = false;
};

namespace detail {

// f(b) mod p for rational coefficients; false when a denominator vanishes.
inline bool eval_ratpoly_mod(const RatPoly& f, long long b, long long p,
                             long long& out) {
  long long acc = 0;
  long long bp = 1;
  for (auto& c : f.coeffs) {
    if (c.den % p == 0) return false;
    long long num = ((c.num % p) + p) % p;
    long long den_inv = (long long)powmod_u64((std::uint64_t)(((c.den % p) + p) % p),
                                              (std::uint64_t)(p - 2), (std::uint64_t)p);
    acc = (acc + (__int128)num * den_inv % p * bp) % p;
    bp = (long long)((__int128)bp * b % p);
  }
  out = acc;
  return true;
}

// polynomial arithmetic mod p on small-degree coefficient vectors
using PolyP = std::vector<long long>;

inline PolyP polyp_trim(PolyP a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
  return a;
}

inline PolyP polyp_rem(PolyP a, const PolyP& b, long long p) {
  long long lead_inv = (long long)powmod_u64((std::uint64_t)b.back(),
                                             (std::uint64_t)(p - 2),
                                             (std::uint64_t)p);
  while (a.size() >= b.size()) {
    long long c = (long long)((__int128)a.back() * lead_inv % p);
    std::size_t off = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i)
      a[off + i] = (long long)(((a[off + i] - (__int128)c * b[i]) % p + p) % p);
    a = polyp_trim(std::move(a));
    if (a.empty()) break;
  }
  return a;
}

inline PolyP polyp_gcd(PolyP a, PolyP b, long long p) {
  a = polyp_trim(std::move(a));
  b = polyp_trim(std::move(b));
  while (!b.empty()) {
    PolyP r = polyp_rem(a, b, p);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

inline PolyP polyp_mulmod(const PolyP& a, const PolyP& b, const PolyP& mod,
                          long long p) {
  PolyP r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      r[i + j] = (long long)((r[i + j] + (__int128)a[i] * b[j]) % p);
  return polyp_rem(polyp_trim(std::move(r)), mod, p);
}

// x^e mod (f, p)
inline PolyP polyp_powmod_x(std::uint64_t e, const PolyP& f, long long p) {
  PolyP result{1};
  PolyP base{0, 1};
  base = polyp_rem(base, f, p);
  while (e) {
    if (e & 1) result = polyp_mulmod(result, base, f, p);
    base = polyp_mulmod(base, base, f, p);
    e >>= 1;
  }
  return result;
}

inline PolyP polyp_pow_generic(PolyP g, std::uint64_t e, const PolyP& f, long long p) {
  PolyP result{1};
  g = polyp_rem(std::move(g), f, p);
  while (e) {
    if (e & 1) result = polyp_mulmod(result, g, f, p);
    g = polyp_mulmod(g, g, f, p);
    e >>= 1;
  }
  return result;
}

// all roots of a completely-split squarefree monic polynomial mod p
inline void polyp_roots(const PolyP& f, long long p, std::uint64_t& rng_state,
                        std::vector<long long>& out) {
  PolyP g = polyp_trim(f);
  if (g.size() <= 1) return;
  if (g.size() == 2) {
    // a + x = 0
    long long a = g[0];
    long long lead = g[1];
    long long inv = (long long)powmod_u64((std::uint64_t)lead, (std::uint64_t)(p - 2),
                                          (std::uint64_t)p);
    out.push_back((long long)((((__int128)(p - a) * inv) % p + p) % p));
    return;
  }
  // Cantor-Zassenhaus split into linear factors
  for (;;) {
    rng_state = rng_state * 6364136223846793005ull + 1442695040888963407ull;
    long long delta = (long long)(rng_state % (std::uint64_t)p);
    PolyP shifted{delta, 1};
    PolyP h = polyp_pow_generic(shifted, (std::uint64_t)((p - 1) / 2), g, p);
    if (h.empty()) continue;
    h[0] = (h[0] + p - 1) % p;
    PolyP d = polyp_gcd(g, polyp_trim(h), p);
    if (d.size() > 1 && d.size() < g.size()) {
      // make monic and recurse
      long long inv = (long long)powmod_u64((std::uint64_t)d.back(),
                                            (std::uint64_t)(p - 2),
                                            (std::uint64_t)p);
      for (auto& c : d) c = (long long)((__int128)c * inv % p);
      PolyP q = g;
      // q = g / d by repeated division (deg <= 4 so do naive deconvolution)
      PolyP quot(g.size() - d.size() + 1, 0);
      PolyP rem = g;
      while (rem.size() >= d.size()) {
        long long c = rem.back();
        std::size_t off = rem.size() - d.size();
        quot[off] = c;
        for (std::size_t i = 0; i < d.size(); ++i)
          rem[off + i] = (long long)(((rem[off + i] - (__int128)c * d[i]) % p + p) % p);
        rem = polyp_trim(std::move(rem));
        if (rem.empty()) break;
      }
      polyp_roots(d, p, rng_state, out);
      polyp_roots(polyp_trim(std::move(quot)), p, rng_state, out);
      return;
    }
  }
}

// minimal-polynomial irreducibility over Q for degree <= 4: rational root
// test plus, for quartics, the resolvent-cubic screen (conservative).
inline bool ratpoly_irreducible(const RatPoly& f) {
  int deg = f.degree();
  if (deg < 1) return false;
  if (deg == 1) return true;
  // clear denominators to an integer polynomial
  long long lcm = 1;
  for (auto& c : f.coeffs) lcm = std::lcm(lcm, c.den);
  std::vector<long long> a(deg + 1, 0);
  for (int i = 0; i <= deg; ++i)
    if (i < (int)f.coeffs.size())
      a[i] = f.coeffs[i].num * (lcm / f.coeffs[i].den);
  // rational roots p/q with p | a0, q | a_deg
  auto divisors = [](long long v) {
    std::vector<long long> out;
    v = std::llabs(v);
    if (v == 0) { out.push_back(0); return out; }
    for (long long d = 1; d * d <= v; ++d)
      if (v % d == 0) {
        out.push_back(d);
        out.push_back(v / d);
      }
    return out;
  };
  if (a[0] == 0) return false;  // x divides
  for (long long pn : divisors(a[0]))
    for (long long qd : divisors(a[deg])) {
      if (qd == 0) continue;
      for (int sign = -1; sign <= 1; sign += 2) {
        Rat root(sign * pn, qd);
        Rat acc(0);
        Rat x(1);
        for (int i = 0; i <= deg; ++i) {
          acc = acc + Rat(a[i]) * x;
          x = x * root;
        }
        if (acc.is_zero()) return false;
      }
    }
  if (deg <= 3) return true;
  // quartic: conservative resolvent-cubic screen on the depressed form
  Rat A(a[3], a[4]), B(a[2], a[4]), C(a[1], a[4]), D(a[0], a[4]);
  Rat pq = B - A * A * Rat(3, 8);
  Rat qq = C - A * B / Rat(2) + A * A * A / Rat(8);
  Rat rq = D - A * C / Rat(4) + A * A * B / Rat(16) - A * A * A * A * Rat(3, 256);
  // resolvent: z^3 - p z^2 - 4 r z + (4 p r - q^2)
  std::vector<Rat> res = {Rat(4) * pq * rq - qq * qq, Rat(-4) * rq, -pq, Rat(1)};
  // rational roots of the resolvent
  long long lcm2 = 1;
  for (auto& c : res) lcm2 = std::lcm(lcm2, c.den);
  std::vector<long long> r(4);
  for (int i = 0; i < 4; ++i) r[i] = res[i].num * (lcm2 / res[i].den);
  if (r[0] == 0) return false;  // conservative
  for (long long pn : divisors(r[0]))
    for (long long qd : divisors(r[3])) {
      if (qd == 0) continue;
      for (int sign = -1; sign <= 1; sign += 2) {
        Rat root(sign * pn, qd);
        Rat acc(0);
        Rat x(1);
        for (int i = 0; i < 4; ++i) {
          acc = acc + Rat(r[i]) * x;
          x = x * root;
        }
        if (acc.is_zero()) return false;  // conservative rejection
      }
    }
  return true;
}

inline Rat circle_distance(const RationalAngle& a, const RationalAngle& b) {
  Rat d = (a.to_rat() - b.to_rat()).abs();
  Rat alt = Rat(1) - d;
  return d < alt ? d : alt;
}

}  // namespace detail

// Prime/character witness scan: keeps primes where the minimal polynomial
// splits completely and R | p-1, then finds the multiplicative exponent
// first and the additive twist second, re-verifying every record by direct
// character evaluation.
inline std::vector<WitnessRecord> witness_search(const WitnessSpec& spec,
                                                 long long p_min, long long p_max,
                                                 long long max_records = 0) {
  if (!detail::ratpoly_irreducible(spec.min_poly))
    throw Error("witness minimal polynomial must be irreducible over Q");
  int deg = spec.min_poly.degree();
  if (deg > 4) throw Error("witness minimal polynomial degree must be <= 4");

  std::vector<WitnessRecord> records;
  auto primes = primes_in_range(std::max(p_min, 3ll), p_max);
  bool any_candidate = false;

  for (long long p : primes) {
    // reduce the minimal polynomial mod p
    bool bad = false;
    detail::PolyP fbar(deg + 1, 0);
    for (int i = 0; i <= deg; ++i) {
      const Rat& c = i < (int)spec.min_poly.coeffs.size() ? spec.min_poly.coeffs[i]
                                                          : Rat(0);
      if (c.den % p == 0) { bad = true; break; }
      long long num = ((c.num % p) + p) % p;
      long long dinv = (long long)powmod_u64(
          (std::uint64_t)(((c.den % p) + p) % p), (std::uint64_t)(p - 2),
          (std::uint64_t)p);
      fbar[i] = (long long)((__int128)num * dinv % p);
    }
    if (bad || fbar[deg] == 0) continue;
    if ((p - 1) % spec.R != 0) continue;
    // complete splitting: x^p = x mod (fbar, p)
    {
      long long inv = (long long)powmod_u64((std::uint64_t)fbar[deg],
                                            (std::uint64_t)(p - 2), (std::uint64_t)p);
      for (auto& c : fbar) c = (long long)((__int128)c * inv % p);
    }
    detail::PolyP xp = detail::polyp_powmod_x((std::uint64_t)p, fbar, p);
    detail::PolyP x_itself{0, 1};
    x_itself = detail::polyp_rem(x_itself, fbar, p);
    if (detail::polyp_trim(xp) != detail::polyp_trim(x_itself)) continue;
    any_candidate = true;

    // roots; pick the smallest for determinism
    std::vector<long long> roots;
    std::uint64_t rng_state = (std::uint64_t)p * 0x9E3779B97F4A7C15ull + 12345;
    detail::polyp_roots(fbar, p, rng_state, roots);
    if ((int)roots.size() != deg) continue;
    std::sort(roots.begin(), roots.end());
    long long b = roots.front();

    Field f = Field::make(p, 1, std::nullopt, FieldOptions{0, false});
    long long m = p - 1;

    // images
    std::vector<long long> gen_vals, basis_vals;
    bad = false;
    for (auto& [poly, target] : spec.gens) {
      long long v;
      if (!detail::eval_ratpoly_mod(poly, b, p, v) || v == 0) { bad = true; break; }
      gen_vals.push_back(v);
    }
    if (bad) continue;
    for (auto& [poly, target] : spec.basis) {
      long long v;
      if (!detail::eval_ratpoly_mod(poly, b, p, v)) { bad = true; break; }
      basis_vals.push_back(v);
    }
    if (bad) continue;

    // root-of-unity constraint on the base character
    long long lam;
    if (!detail::eval_ratpoly_mod(spec.lambda_R, b, p, lam) || lam == 0) continue;
    long long lam_ord = f.element_order((Fe)lam);
    if (spec.R % lam_ord != 0) continue;
    // dlog of lam: lam = g^{(m/lam_ord) j}
    long long lam_dlog = -1;
    for (long long j = 0; j < lam_ord; ++j) {
      if (f.pow((Fe)f.generator(), (m / lam_ord) * j) == (Fe)lam) {
        lam_dlog = (m / lam_ord) * j;
        break;
      }
    }
    if (lam_dlog < 0) continue;
    {
      RationalAngle base_on_lam((long long)((__int128)spec.f * lam_dlog % m), m);
      if (!(base_on_lam == spec.s_R)) continue;
    }

    // multiplicative exponent: first l = f (mod R) matching every generator
    // target within tolerance with character order >= K
    std::vector<long long> gen_dlogs;
    for (long long v : gen_vals) gen_dlogs.push_back(f.dlog((Fe)v));
    long long l_found = -1;
    {
      std::vector<long long> cur(gen_dlogs.size()), step(gen_dlogs.size());
      for (std::size_t i = 0; i < gen_dlogs.size(); ++i) {
        cur[i] = (long long)((__int128)spec.f * gen_dlogs[i] % m);
        step[i] = (long long)((__int128)spec.R * gen_dlogs[i] % m);
      }
      for (long long l = spec.f; l <= m; l += spec.R) {
        bool ok = true;
        for (std::size_t i = 0; i < gen_dlogs.size() && ok; ++i) {
          Rat dist = detail::circle_distance(RationalAngle(cur[i], m),
                                             spec.gens[i].second);
          ok = !(spec.tolerance < dist);
        }
        if (ok && (m / std::gcd(l, m)) >= spec.K) { l_found = l; break; }
        for (std::size_t i = 0; i < cur.size(); ++i) {
          cur[i] += step[i];
          if (cur[i] >= m) cur[i] -= m;
        }
      }
    }
    if (l_found < 0) continue;

    // additive twist second
    long long r_found = -1;
    {
      std::vector<long long> cur(basis_vals.size()), step(basis_vals.size());
      for (std::size_t i = 0; i < basis_vals.size(); ++i) {
        cur[i] = basis_vals[i] % p;
        step[i] = basis_vals[i] % p;
      }
      for (long long r = 1; r < p; ++r) {
        bool ok = true;
        for (std::size_t i = 0; i < basis_vals.size() && ok; ++i) {
          Rat dist = detail::circle_distance(RationalAngle(cur[i], p),
                                             spec.basis[i].second);
          ok = !(spec.tolerance < dist);
        }
        if (ok) { r_found = r; break; }
        for (std::size_t i = 0; i < cur.size(); ++i) {
          cur[i] += step[i];
          if (cur[i] >= p) cur[i] -= p;
        }
      }
    }
    if (r_found < 0) continue;

    // assemble + independent re-verification through the character modules
    WitnessRecord rec;
    rec.p = p;
    rec.root = b;
    rec.add_twist = r_found;
    rec.mult_exp = l_found;
    AdditiveCharacter psi{(Fe)r_found};
    MultiplicativeCharacter chi{l_found};
    bool verified = true;
    for (std::size_t i = 0; i < gen_vals.size(); ++i) {
      CharacterValue v = chi_eval(f, chi, (Fe)gen_vals[i]);
      if (v.zero) { verified = false; break; }
      rec.gen_angles.push_back(v.angle);
      if (spec.tolerance < detail::circle_distance(v.angle, spec.gens[i].second))
        verified = false;
    }
    for (std::size_t i = 0; i < basis_vals.size() && verified; ++i) {
      RationalAngle a = psi_eval(f, psi, (Fe)basis_vals[i]);
      rec.basis_angles.push_back(a);
      if (spec.tolerance < detail::circle_distance(a, spec.basis[i].second))
        verified = false;
    }
    if (verified) {
      CharacterValue v = chi_eval(f, chi, (Fe)lam);
      verified = !v.zero && v.angle == spec.s_R;
    }
    if (verified) verified = character_order(f, chi) >= spec.K;
    rec.verified = verified;
    if (verified) {
      records.push_back(std::move(rec));
      if (max_records > 0 && (long long)records.size() >= max_records) break;
    }
  }
  if (!any_candidate)
    throw NoPrimesFoundError("no prime in range splits the minimal polynomial "
                             "with R | p-1");
  return records;
}

}  // namespace charlab
