#pragma once

#include <cmath>
#include <functional>

namespace rescomp {

// Golden-section minimization of a unimodal f on [lo, hi]; stops once the bracket
// is narrower than tol.
inline double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi, double tol,
                                      int max_iterations = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iterations && hi - lo > tol; ++i) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

// Root of g on [lo, hi] given g(lo) and g(hi) of opposite sign.
inline double bisect_root(const std::function<double(double)>& g, double lo, double hi, double tol,
                          int max_iterations = 200) {
  double glo = g(lo);
  for (int i = 0; i < max_iterations && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace rescomp
