#pragma once

#include <cmath>
#include <utility>

namespace biasedselect::numerics {

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson_rec(F&& f, double a, double fa, double b, double fb, double m, double fm,
                            double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol) {
    return left + right + err / 15.0;
  }
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson on [a, b] to absolute tolerance tol.
template <typename F>
double integrate(F&& f, double a, double b, double tol = 1e-9, int max_depth = 60) {
  if (!(a < b)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = detail::simpson(a, fa, b, fb, fm);
  return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// Root of a monotone non-increasing g on [lo, hi]: the x with g(x) = 0,
// clamped to an endpoint when g does not change sign. Bisects to x-tolerance.
template <typename G>
double bisect_decreasing(G&& g, double lo, double hi, double xtol = 1e-12, int max_iter = 200) {
  double glo = g(lo);
  double ghi = g(hi);
  if (glo <= 0.0) return lo;
  if (ghi >= 0.0) return hi;
  for (int it = 0; it < max_iter && (hi - lo) > xtol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Golden-section maximization of a unimodal f on [a, b].
template <typename F>
std::pair<double, double> golden_section_max(F&& f, double a, double b, int iters = 80) {
  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  const double xm = 0.5 * (a + b);
  return {xm, f(xm)};
}

}  // namespace biasedselect::numerics
