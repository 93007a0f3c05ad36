#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace gho {

/// Reduced fraction num/den with den > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (d == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) { num = -num; den = -den; }
    const auto g = std::gcd(num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend Rational operator+(Rational a, Rational b) {
    return {a.num * b.den + b.num * a.den, a.den * b.den};
  }
  friend Rational operator-(Rational a, Rational b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Best rational approximation with denominator <= max_den (continued fractions,
/// including the semiconvergent check).
inline Rational best_rational(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw std::invalid_argument("best_rational: non-finite input");
  if (max_den < 1) throw std::invalid_argument("best_rational: max_den must be >= 1");
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double af = std::floor(r);
    if (std::abs(af) > 9e15) break;
    const auto a = static_cast<std::int64_t>(af);
    const std::int64_t q2 = q0 + a * q1;
    if (q2 > max_den) {
      const std::int64_t k = (max_den - q0) / q1;
      const Rational semi(p0 + k * p1, q0 + k * q1);
      const Rational conv(p1, q1);
      return std::abs(semi.value() - x) < std::abs(conv.value() - x) ? semi : conv;
    }
    const std::int64_t p2 = p0 + a * p1;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    const double frac = r - af;
    if (frac < 1e-15 || std::abs(static_cast<double>(p1) / q1 - x) <= 1e-15 * std::max(1.0, std::abs(x)))
      break;
    r = 1.0 / frac;
  }
  return {p1, q1};
}

/// The rational number with the smallest denominator that equals x to within tol.
inline Rational recover_rational(double x, double tol = 1e-12, std::int64_t max_den = 1'000'000) {
  for (std::int64_t d = 1; d <= max_den; d = d < 64 ? d + 1 : d * 2) {
    const Rational r = best_rational(x, d);
    if (std::abs(r.value() - x) <= tol) return r;
  }
  throw std::invalid_argument("recover_rational: " + std::to_string(x) +
                              " is not a rational with denominator <= " + std::to_string(max_den));
}

/// A rational offset r = num/den from a rational base, chosen close to a real target offset
/// so that base + r (and base - r when two-sided) have small denominators.
struct RationalOffset {
  Rational offset;
  Rational plus;                  // base + offset
  std::optional<Rational> minus;  // base - offset, two-sided only
  double relative_error = 0.0;    // |offset - target| / target
};

struct OffsetSearch {
  /// Allowed relative deviation of the offset from its target.
  double rel_tol = 0.02;
  /// Largest denominator tried for the offset itself.
  std::int64_t max_offset_den = 30000;
  /// Largest admissible denominator of base +- offset.
  std::int64_t max_den = 4096;
};

/// Minimizes the cost den(base + r)^3 (+ den(base - r)^3 when two_sided) over offsets r with
/// |r - target| <= rel_tol * target. Ties go to the smaller offset denominator.
inline RationalOffset rational_offset(Rational base, double target, bool two_sided,
                                      const OffsetSearch& opt = {}) {
  if (!(target > 0.0)) throw std::invalid_argument("rational_offset: target must be positive");
  std::optional<RationalOffset> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::int64_t d = 1; d <= opt.max_offset_den; ++d) {
    const auto center = static_cast<std::int64_t>(std::llround(target * static_cast<double>(d)));
    for (std::int64_t n = std::max<std::int64_t>(1, center - 1); n <= center + 1; ++n) {
      const double v = static_cast<double>(n) / static_cast<double>(d);
      const double err = std::abs(v - target) / target;
      if (err > opt.rel_tol) continue;
      const Rational r(n, d);
      if (r.den != d) continue;  // seen at a smaller denominator
      const Rational plus = base + r;
      if (plus.den > opt.max_den) continue;
      double cost = std::pow(double(plus.den), 3);
      std::optional<Rational> minus;
      if (two_sided) {
        minus = base - r;
        if (minus->den > opt.max_den) continue;
        cost += std::pow(double(minus->den), 3);
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = RationalOffset{r, plus, minus, err};
      }
    }
  }
  if (!best)
    throw std::invalid_argument("rational_offset: no offset within " + std::to_string(opt.rel_tol) +
                                " of " + std::to_string(target) + " with denominators <= " +
                                std::to_string(opt.max_den));
  return *best;
}

}  // namespace gho
