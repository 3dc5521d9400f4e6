#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace smallcell::numerics {

namespace detail {

template <class F>
double adapt_simpson(F& f, double a, double fa, double b, double fb, double m,
                     double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adapt_simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adapt_simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
/// `rel_tol` is applied against a coarse first estimate of the integral.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 int max_depth = 48) {
  if (!(a < b)) {
    if (a == b) return 0.0;
    throw std::invalid_argument("integrate: requires a <= b");
  }
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol =
      rel_tol * std::max(std::abs(whole), 1e-12) + 1e-300;
  return detail::adapt_simpson(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

enum class BracketEdge { interior, lower, upper };

struct GoldenResult {
  double arg = 0.0;
  double value = 0.0;
  BracketEdge edge = BracketEdge::interior;
};

/// Golden-section minimization of f on [lo, hi] to a relative argument
/// tolerance. Deterministic. The edge flag marks minima that landed at (or
/// within tolerance of) a bracket endpoint, where unimodality gives no
/// interior guarantee.
template <class F>
GoldenResult golden_section_minimize(F&& f, double lo, double hi,
                                     double rel_tol = 1e-6,
                                     int max_iter = 400) {
  if (!(lo < hi)) throw std::invalid_argument("golden_section_minimize: lo < hi required");
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;  // 0.618...
  const double lo0 = lo;
  const double hi0 = hi;
  double c = hi - gr * (hi - lo);
  double d = lo + gr * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter; ++i) {
    if (hi - lo <= rel_tol * (std::abs(lo) + std::abs(hi)) * 0.5) break;
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = f(d);
    }
  }
  GoldenResult r;
  r.arg = 0.5 * (lo + hi);
  r.value = f(r.arg);
  const double span = hi0 - lo0;
  const double edge_band = std::max(8.0 * rel_tol * std::max(std::abs(lo0), std::abs(hi0)), 1e-12 * span);
  if (r.arg - lo0 <= edge_band) {
    r.edge = BracketEdge::lower;
    r.arg = lo0;
    r.value = f(lo0);
  } else if (hi0 - r.arg <= edge_band) {
    r.edge = BracketEdge::upper;
    r.arg = hi0;
    r.value = f(hi0);
  }
  return r;
}

/// In-place Cholesky test for a symmetric row-major k x k matrix.
/// Returns true iff the matrix is positive definite.
inline bool cholesky_positive_definite(std::vector<double> m, std::size_t k) {
  if (m.size() != k * k) throw std::invalid_argument("cholesky: bad matrix size");
  for (std::size_t j = 0; j < k; ++j) {
    double diag = m[j * k + j];
    for (std::size_t p = 0; p < j; ++p) diag -= m[j * k + p] * m[j * k + p];
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    m[j * k + j] = ljj;
    for (std::size_t i = j + 1; i < k; ++i) {
      double v = m[i * k + j];
      for (std::size_t p = 0; p < j; ++p) v -= m[i * k + p] * m[j * k + p];
      m[i * k + j] = v / ljj;
    }
  }
  return true;
}

/// Bisection root of a monotone continuous f; f(lo) and f(hi) must bracket 0.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-12,
              int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw std::invalid_argument("bisect: endpoints do not bracket a root");
  for (int i = 0; i < max_iter && (hi - lo) > tol * (std::abs(lo) + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace smallcell::numerics
