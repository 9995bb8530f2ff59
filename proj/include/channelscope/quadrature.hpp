#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "channelscope/config.hpp"
#include "channelscope/errors.hpp"

namespace channelscope {

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double fa, double b,
                      double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa,
                                   double b, double fb, double fm, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, flm);
  const double right = simpson(f, m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) raise(errc::not_converged, "adaptive quadrature exceeded depth limit");
  return adaptive_simpson_rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson with a relative tolerance (floored absolutely for
// near-zero integrals). Refinement starts from a 64-panel composite pass,
// not from one blind top-level estimate: a localized integrand can hide
// all of its mass between three samples and make the crude and refined
// estimates agree on the wrong answer.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = default_tolerances().quadrature, int max_depth = 48) {
  if (!(b > a)) raise(errc::bad_params, "integrate: need b > a");
  const int panels = 64;
  const double hp = (b - a) / panels;
  std::vector<double> edge(panels + 1), mid(panels);
  for (int k = 0; k <= panels; ++k) edge[k] = f(k == panels ? b : a + hp * k);
  for (int k = 0; k < panels; ++k) mid[k] = f(a + hp * (k + 0.5));
  double coarse = 0.0;
  for (int k = 0; k < panels; ++k)
    coarse += hp / 6.0 * (edge[k] + 4.0 * mid[k] + edge[k + 1]);
  const double scale = std::max(std::abs(coarse), 1e-12);
  const double panel_tol = rel_tol * scale / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + hp * k, hi = (k + 1 == panels) ? b : a + hp * (k + 1);
    const double whole = detail::simpson(f, lo, edge[k], hi, edge[k + 1], mid[k]);
    total += detail::adaptive_simpson_rec(f, lo, edge[k], hi, edge[k + 1], mid[k], whole,
                                          panel_tol, max_depth);
  }
  return total;
}

// Bisection for a sign change of f on [lo, hi]; f(lo) and f(hi) must differ
// in sign. Returns the bracketing midpoint at width <= tol.
inline double find_root(const std::function<double(double)>& f, double lo, double hi,
                        double tol = 1e-8) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) raise(errc::bad_params, "find_root: no sign change on bracket");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace channelscope
