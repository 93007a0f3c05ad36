#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace gho {

struct LatticeSum {
  double value = 0.0;
  std::int64_t radius = 0;  // summed over |y|_inf <= radius
  double tail = 0.0;        // bound on the omitted part
};

/// Sum of exp(-rate |y|_2) over y in Z^2, truncated once the shell tail
/// sum_{r > R} 8 r exp(-rate r) drops below rel_tol of the partial sum.
inline LatticeSum lattice_exp_sum(double rate, double rel_tol = 1e-12) {
  if (!(rate > 0.0)) throw std::invalid_argument("lattice_exp_sum: rate must be positive");
  const double q = std::exp(-rate);
  auto tail_after = [q](std::int64_t R) {
    const double r = static_cast<double>(R);
    return 8.0 * std::pow(q, r + 1.0) * ((r + 1.0) - r * q) / ((1.0 - q) * (1.0 - q));
  };
  LatticeSum s;
  s.value = 1.0;  // y = 0
  for (std::int64_t r = 1;; ++r) {
    // shell |y|_inf = r
    double shell = 0.0;
    for (std::int64_t k = -r; k < r; ++k) {
      const double a = std::exp(-rate * std::hypot(double(r), double(k)));
      shell += 4.0 * a;  // four sides, each side counted from one corner
    }
    s.value += shell;
    const double tail = tail_after(r);
    if (tail <= rel_tol * s.value) {
      s.radius = r;
      s.tail = tail;
      return s;
    }
  }
}

/// Row sum sum_y exp(-beta |y|_2 / 2), which dominates the norm of the matrix
/// A(x, y) = exp(-beta |x - y|_2 / 2) by the Schur test.
inline double schur_row_sum(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("schur_row_sum: beta must be positive");
  return lattice_exp_sum(beta / 2.0).value;
}

/// C * sum_y exp(-beta |y|_2): bounds the norm of every operator with a kernel declared (C, beta).
inline double norm_bound_H(double C, double beta) {
  if (!(C > 0.0)) throw std::invalid_argument("norm_bound_H: C must be positive");
  if (!(beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("norm_bound_H: beta must lie in (0, 1]");
  return C * lattice_exp_sum(beta).value;
}

/// sup_{x > 0} x^m exp(-alpha x) = (m / alpha)^m exp(-m).
inline double sup_xm_exp(double m, double alpha) {
  if (!(m > 0.0) || !(alpha > 0.0))
    throw std::invalid_argument("sup_xm_exp: m and alpha must be positive");
  return std::pow(m / alpha, m) * std::exp(-m);
}

}  // namespace gho
