#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gho/parallel.hpp"

namespace gho {

/// u = a / 2^n with a in (1/2, 1] and n >= 1; exact in binary floating point.
struct Dyadic {
  double a = 1.0;
  int n = 1;
};

inline Dyadic dyadic_decompose(double u) {
  if (!(u > 0.0 && u <= 0.5)) throw std::invalid_argument("dyadic_decompose: u must lie in (0, 1/2]");
  int e = 0;
  const double m = std::frexp(u, &e);  // u = m 2^e, m in [1/2, 1)
  if (m > 0.5) return {m, -e};
  return {1.0, 1 - e};
}

/// Modulus of continuity for a function with half-range P and midpoint defect <= N eta^alpha:
///   alpha > 1: (4P + 3N / (1 - 2^(1-alpha))) u
///   alpha = 1: (4P + 6N) u |ln u|
///   alpha < 1: (4P + 2N / (1 - 2^(alpha-1))) u^alpha
/// The logarithmic case is selected by alpha == 1 exactly.
inline double modulus_bound(double P, double N, double alpha, double u) {
  if (!(u > 0.0 && u <= 0.5)) throw std::invalid_argument("modulus_bound: u must lie in (0, 1/2]");
  if (!(P >= 0.0) || !(N >= 0.0)) throw std::invalid_argument("modulus_bound: P, N must be >= 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("modulus_bound: alpha must be positive");
  if (alpha == 1.0) return (4.0 * P + 6.0 * N) * u * std::abs(std::log(u));
  if (alpha > 1.0) return (4.0 * P + 3.0 * N / (1.0 - std::pow(2.0, 1.0 - alpha))) * u;
  return (4.0 * P + 2.0 * N / (1.0 - std::pow(2.0, alpha - 1.0))) * std::pow(u, alpha);
}

/// Function values on a strictly increasing grid.
struct SampledFunction {
  std::vector<double> x;
  std::vector<double> f;

  void validate() const {
    if (x.size() != f.size()) throw std::invalid_argument("SampledFunction: x and f differ in length");
    if (x.size() < 3) throw std::invalid_argument("SampledFunction: need at least 3 samples");
    for (std::size_t i = 1; i < x.size(); ++i)
      if (!(x[i] > x[i - 1])) throw std::invalid_argument("SampledFunction: x must be strictly increasing");
  }

  static SampledFunction tabulate(const std::function<double(double)>& F, std::vector<double> grid) {
    SampledFunction s;
    s.f.reserve(grid.size());
    for (double g : grid) s.f.push_back(F(g));
    s.x = std::move(grid);
    return s;
  }
};

/// Uniform grid lo, lo + h, ..., covering [lo, hi] (hi included up to rounding).
inline std::vector<double> uniform_grid(double lo, double hi, double h) {
  if (!(h > 0.0) || !(hi > lo)) throw std::invalid_argument("uniform_grid: need hi > lo and h > 0");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / h + 1e-9));
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = lo + double(i) * h;
  return g;
}

/// The geometric ladder eta_max 2^-k, k = 0..12.
inline std::vector<double> eta_ladder(double eta_max) {
  if (!(eta_max > 0.0 && eta_max <= 0.5)) throw std::invalid_argument("eta_ladder: eta_max must lie in (0, 1/2]");
  std::vector<double> v;
  for (int k = 0; k <= 12; ++k) v.push_back(std::ldexp(eta_max, -k));
  return v;
}

struct DefectRatio {
  double eta = 0.0;
  double max_ratio = 0.0;  // max over x of defect / eta^alpha (may be negative)
};

struct AlmostConvexConstants {
  double P = 0.0;
  double Ndefect = 0.0;
  std::vector<DefectRatio> ratios;
};

/// P = (max - min)/2 over the grid; Ndefect = max over (x, eta) of
/// [F(x) - (F(x + eta) + F(x - eta))/2] / eta^alpha, floored at 0, for x on the grid with
/// x +- eta inside [grid.front(), grid.back()] and eta on the ladder.
inline AlmostConvexConstants estimate_constants(const std::function<double(double)>& F,
                                                const std::vector<double>& grid, double eta_max, double alpha) {
  if (grid.size() < 3) throw std::invalid_argument("estimate_constants: need at least 3 grid points");
  if (!(alpha > 0.0)) throw std::invalid_argument("estimate_constants: alpha must be positive");
  AlmostConvexConstants c;
  std::vector<double> fx(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) fx[i] = F(grid[i]);
  const auto [lo, hi] = std::minmax_element(fx.begin(), fx.end());
  c.P = 0.5 * (*hi - *lo);
  for (double eta : eta_ladder(eta_max)) {
    DefectRatio r{eta, -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid[i];
      if (x - eta < grid.front() || x + eta > grid.back()) continue;
      const double defect = fx[i] - 0.5 * (F(x + eta) + F(x - eta));
      r.max_ratio = std::max(r.max_ratio, defect / std::pow(eta, alpha));
    }
    if (std::isfinite(r.max_ratio)) {
      c.ratios.push_back(r);
      c.Ndefect = std::max(c.Ndefect, r.max_ratio);
    }
  }
  return c;
}

/// Sampled variant on a uniform grid: ladder steps are snapped to whole grid steps so that
/// x +- eta are grid points; steps that round to zero are skipped.
inline AlmostConvexConstants estimate_constants(const SampledFunction& s, double eta_max, double alpha) {
  s.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("estimate_constants: alpha must be positive");
  const std::size_t n = s.x.size();
  const double h = (s.x.back() - s.x.front()) / double(n - 1);
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs((s.x[i] - s.x[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw std::invalid_argument("estimate_constants: sampled data must be uniformly spaced");
  AlmostConvexConstants c;
  const auto [lo, hi] = std::minmax_element(s.f.begin(), s.f.end());
  c.P = 0.5 * (*hi - *lo);
  std::vector<std::size_t> steps;
  for (double eta : eta_ladder(eta_max)) {
    const auto k = static_cast<std::size_t>(std::llround(eta / h));
    if (k < 1 || std::find(steps.begin(), steps.end(), k) != steps.end()) continue;
    steps.push_back(k);
  }
  for (std::size_t k : steps) {
    const double eta = double(k) * h;
    DefectRatio r{eta, -std::numeric_limits<double>::infinity()};
    for (std::size_t i = k; i + k < n; ++i) {
      const double defect = s.f[i] - 0.5 * (s.f[i + k] + s.f[i - k]);
      r.max_ratio = std::max(r.max_ratio, defect / std::pow(eta, alpha));
    }
    if (std::isfinite(r.max_ratio)) {
      c.ratios.push_back(r);
      c.Ndefect = std::max(c.Ndefect, r.max_ratio);
    }
  }
  return c;
}

struct Violation {
  double x = 0.0, y = 0.0;
  double difference = 0.0;  // |F(x) - F(y)|
  double bound = 0.0;
  double margin() const { return difference - bound; }
};

struct SmoothnessCertificate {
  double P = 0.0;
  double Ndefect = 0.0;
  double alpha = 1.0;
  std::vector<DefectRatio> ratios;
  std::vector<Violation> violations;
  std::size_t pairs_checked = 0;
  /// Smallest bound - difference over all checked pairs (slack of the certificate).
  double min_slack = std::numeric_limits<double>::infinity();

  double bound(double u) const { return modulus_bound(P, Ndefect, alpha, u); }
  bool valid() const { return violations.empty(); }
};

struct CertifyOptions {
  unsigned jobs = 1;
  /// Rounding allowance: a pair violates only if difference > bound + tol * (1 + |F|).
  double tol = 1e-12;
};

namespace detail {

inline void check_pairs(const SampledFunction& s, SmoothnessCertificate& cert, const CertifyOptions& opt) {
  struct RowResult {
    std::vector<Violation> v;
    std::size_t pairs = 0;
    double slack = std::numeric_limits<double>::infinity();
  };
  const auto rows = parallel_map(s.x.size(), opt.jobs, [&](std::size_t i) {
    RowResult r;
    for (std::size_t j = i + 1; j < s.x.size(); ++j) {
      const double u = s.x[j] - s.x[i];
      if (u > 0.5) break;
      const double diff = std::abs(s.f[j] - s.f[i]);
      const double b = cert.bound(u);
      ++r.pairs;
      r.slack = std::min(r.slack, b - diff);
      const double scale = 1.0 + std::max(std::abs(s.f[i]), std::abs(s.f[j]));
      if (diff > b + opt.tol * scale) r.v.push_back({s.x[i], s.x[j], diff, b});
    }
    return r;
  });
  for (const auto& r : rows) {
    cert.violations.insert(cert.violations.end(), r.v.begin(), r.v.end());
    cert.pairs_checked += r.pairs;
    cert.min_slack = std::min(cert.min_slack, r.slack);
  }
}

inline SmoothnessCertificate start_certificate(const AlmostConvexConstants& c, double alpha) {
  SmoothnessCertificate cert;
  cert.P = c.P;
  cert.Ndefect = c.Ndefect;
  cert.alpha = alpha;
  cert.ratios = c.ratios;
  return cert;
}

}  // namespace detail

/// Checks |F(x) - F(y)| <= modulus_bound(P, Ndefect, alpha, |x - y|) on all grid pairs with
/// 0 < |x - y| <= 1/2, using constants estimated from the same samples.
inline SmoothnessCertificate certify(const SampledFunction& s, double eta_max, double alpha,
                                     const CertifyOptions& opt = {}) {
  auto cert = detail::start_certificate(estimate_constants(s, eta_max, alpha), alpha);
  detail::check_pairs(s, cert, opt);
  return cert;
}

/// Oracle form: defects use the unsnapped ladder, pairs run over the grid.
inline SmoothnessCertificate certify(const std::function<double(double)>& F, const std::vector<double>& grid,
                                     double eta_max, double alpha, const CertifyOptions& opt = {}) {
  auto s = SampledFunction::tabulate(F, grid);
  s.validate();
  auto cert = detail::start_certificate(estimate_constants(F, grid, eta_max, alpha), alpha);
  detail::check_pairs(s, cert, opt);
  return cert;
}

}  // namespace gho
