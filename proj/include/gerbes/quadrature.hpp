#pragma once

// Composite Gauss-Legendre quadrature. Panel counts derive from interval
// length by default, so dyadic subintervals of a common parent integrate
// over aligned panel sets; integrators that know the swept arc of their
// integrand pass explicit counts instead.

#include <functional>

#include "gerbes/core.hpp"

namespace gerbes {

inline double integrate_gl_n(const std::function<double(double)>& f, double a,
                             double b, int order, int n_panels) {
  const GLRule& r = gl_rule(order);
  int n = std::max(1, n_panels);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    double pa = a + (b - a) * k / n;
    double pb = a + (b - a) * (k + 1) / n;
    double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
    double s = 0.0;
    for (int i = 0; i < order; ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
    total += s * half;
  }
  return total;
}

inline double integrate_gl(const std::function<double(double)>& f, double a,
                           double b, int order, int panels_per_unit) {
  int n = std::max<long>(1, std::lround((b - a) * panels_per_unit));
  return integrate_gl_n(f, a, b, order, n);
}

inline double integrate_gl2_n(const std::function<double(double, double)>& f,
                              double a1, double b1, double a2, double b2,
                              int order, int n1, int n2) {
  return integrate_gl_n(
      [&](double x) {
        return integrate_gl_n([&, x](double y) { return f(x, y); }, a2, b2,
                              order, n2);
      },
      a1, b1, order, n1);
}

inline double integrate_gl2(const std::function<double(double, double)>& f,
                            double a1, double b1, double a2, double b2, int order,
                            int panels_per_unit) {
  return integrate_gl(
      [&](double x) {
        return integrate_gl([&, x](double y) { return f(x, y); }, a2, b2, order,
                            panels_per_unit);
      },
      a1, b1, order, panels_per_unit);
}

}  // namespace gerbes
