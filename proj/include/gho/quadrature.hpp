#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace gho::quadrature {

/// Composite Simpson rule on [0, 1] with `intervals` (even) subintervals.
template <typename F>
double simpson_unit(F&& f, int intervals = 64) {
  if (intervals <= 0 || intervals % 2 != 0)
    throw std::invalid_argument("simpson_unit: interval count must be positive and even");
  const double h = 1.0 / intervals;
  double sum = f(0.0) + f(1.0);
  for (int k = 1; k < intervals; ++k) sum += (k % 2 == 1 ? 4.0 : 2.0) * f(k * h);
  return sum * h / 3.0;
}

namespace detail {
template <typename F>
double simpson_refine(F& f, double a, double b, double fa, double fm, double fb, double whole,
                      double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Composite Simpson on [a, b] with `intervals` panels, each refined adaptively
/// until its Richardson error estimate is below its share of `tol`.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, int intervals = 64, int max_depth = 40) {
  if (intervals <= 0) throw std::invalid_argument("adaptive_simpson: need a positive panel count");
  const double h = (b - a) / intervals;
  double sum = 0.0;
  double fa = f(a);
  for (int k = 0; k < intervals; ++k) {
    const double x0 = a + k * h, x1 = (k + 1 == intervals) ? b : a + (k + 1) * h;
    const double xm = 0.5 * (x0 + x1);
    const double fm = f(xm), fb = f(x1);
    const double whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
    sum += detail::simpson_refine(f, x0, x1, fa, fm, fb, whole, tol / intervals, max_depth);
    fa = fb;
  }
  return sum;
}

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights by Newton iteration on P_n.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) { p1 = x; p0 = 1.0; }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace gho::quadrature
