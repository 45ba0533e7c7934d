#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "sgnd/errors.hpp"

namespace sgnd {

// Gauss-Kronrod 15(7) nodes/weights on [-1, 1].
namespace gk15 {
inline constexpr double nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,
    0.741531185599394,  0.864864423359769,  0.949107912342759,
    0.991455371120813};
inline constexpr double kronrod_w[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
// Gauss-7 weights mapped onto the odd Kronrod nodes.
inline constexpr double gauss_w[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};
}  // namespace gk15

template <typename F>
std::pair<double, double> gk15_panel(const F& f, double a, double b) {
  const double h = 0.5 * (b - a);
  const double c = 0.5 * (a + b);
  double kron = 0.0, gauss = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(c + h * gk15::nodes[i]);
    kron += gk15::kronrod_w[i] * v;
    if (i % 2 == 1) gauss += gk15::gauss_w[i / 2] * v;
  }
  return {h * kron, std::abs(h * (kron - gauss))};
}

// Adaptive bisection on a finite interval; absolute tolerance.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol,
                          int max_depth = 60) {
  struct Rec {
    const F& f;
    double tol;
    int max_depth;
    double run(double lo, double hi, double est, double err, int depth) const {
      if (err <= tol || depth >= max_depth) {
        if (err > tol && depth >= max_depth)
          throw QuadratureFailure("refinement budget exhausted");
        return est;
      }
      const double mid = 0.5 * (lo + hi);
      auto [el, errl] = gk15_panel(f, lo, mid);
      auto [er, errr] = gk15_panel(f, mid, hi);
      // Split the remaining budget between halves.
      const double half_tol = 0.5 * tol;
      Rec sub{f, half_tol, max_depth};
      return sub.run(lo, mid, el, errl, depth + 1) +
             sub.run(mid, hi, er, errr, depth + 1);
    }
  };
  auto [est, err] = gk15_panel(f, a, b);
  return Rec{f, abs_tol, max_depth}.run(a, b, est, err, 0);
}

// Integral over [0, inf) via the substitution u = z/(1+z), z = u/(1-u).
template <typename F>
double integrate_half_line(const F& f, double abs_tol, int max_depth = 60) {
  auto g = [&f](double u) {
    if (u >= 1.0) return 0.0;
    const double om = 1.0 - u;
    return f(u / om) / (om * om);
  };
  return integrate_adaptive(g, 0.0, 1.0, abs_tol, max_depth);
}

}  // namespace sgnd
