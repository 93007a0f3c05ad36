#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gho/lattice.hpp"
#include "gho/quadrature.hpp"

namespace gho {

using cplx = std::complex<double>;

/// One translation-invariant hopping amplitude: h(x, y) = t whenever x - y = offset.
struct Hop {
  LatticePoint offset;
  cplx amplitude;
};

/// Hopping kernel h(x, y) together with its declared decay constants
/// |h(x, y)| <= C exp(-beta |x - y|_2) and a hard cutoff radius.
class KernelSpec {
 public:
  using Rule = std::function<cplx(LatticePoint, LatticePoint)>;

  KernelSpec(std::string name, Rule rule, double C, double beta,
             std::optional<std::int64_t> cutoff = std::nullopt)
      : name_(std::move(name)), rule_(std::move(rule)), C_(C), beta_(beta) {
    if (!(C > 0.0)) throw std::invalid_argument("KernelSpec: C must be positive");
    if (!(beta > 0.0 && beta <= 1.0))
      throw std::invalid_argument("KernelSpec: beta must lie in (0, 1]");
    cutoff_ = cutoff.value_or(default_cutoff(beta));
    if (cutoff_ <= 0) throw std::invalid_argument("KernelSpec: cutoff radius must be positive");
  }

  static std::int64_t default_cutoff(double beta) {
    return static_cast<std::int64_t>(std::ceil(18.0 / beta));
  }

  /// Kernel value; exactly zero beyond the cutoff radius.
  cplx operator()(LatticePoint x, LatticePoint y) const {
    if (dist2(x, y) > static_cast<double>(cutoff_)) return {0.0, 0.0};
    return rule_(x, y);
  }

  const std::string& name() const { return name_; }
  double C() const { return C_; }
  double beta() const { return beta_; }
  std::int64_t cutoff_radius() const { return cutoff_; }

  /// Offsets c for which h(x, x - c) may be nonzero; empty when unknown.
  const std::vector<LatticePoint>& stencil() const { return stencil_; }
  /// Hopping table when h(x, y) = t(x - y).
  const std::optional<std::vector<Hop>>& translation_table() const { return hops_; }
  bool translation_invariant() const { return hops_.has_value(); }

  KernelSpec& with_stencil(std::vector<LatticePoint> s) {
    stencil_ = std::move(s);
    return *this;
  }
  KernelSpec& with_translation_table(std::vector<Hop> hops) {
    stencil_.clear();
    for (const auto& h : hops) stencil_.push_back(h.offset);
    hops_ = std::move(hops);
    return *this;
  }

  /// Upper bound on the operator-norm error from the hard cutoff:
  /// C * sum over |y|_2 > R of exp(-beta |y|_2).
  double tail_bound() const {
    const std::int64_t R = cutoff_;
    const std::int64_t Rmax = R + static_cast<std::int64_t>(std::ceil(40.0 / beta_)) + 1;
    double s = 0.0;
    for (std::int64_t i = -Rmax; i <= Rmax; ++i)
      for (std::int64_t j = -Rmax; j <= Rmax; ++j) {
        const double r = std::hypot(double(i), double(j));
        if (r > double(R)) s += std::exp(-beta_ * r);
      }
    return C_ * s;
  }

 private:
  std::string name_;
  Rule rule_;
  double C_;
  double beta_;
  std::int64_t cutoff_ = 0;
  std::vector<LatticePoint> stencil_;
  std::optional<std::vector<Hop>> hops_;
};

/// Real antisymmetric magnetic phase phi(x, y) with flux bound
/// |F(x, y, z)| <= B * area(x, y, z).
class PhaseSpec {
 public:
  using Rule = std::function<double(LatticePoint, LatticePoint)>;

  PhaseSpec(std::string name, Rule rule, double flux_bound,
            std::optional<double> uniform_field = std::nullopt)
      : name_(std::move(name)), rule_(std::move(rule)), B_(flux_bound), uniform_(uniform_field) {
    if (!(flux_bound >= 0.0)) throw std::invalid_argument("PhaseSpec: flux bound must be >= 0");
  }

  double operator()(LatticePoint x, LatticePoint y) const { return rule_(x, y); }

  const std::string& name() const { return name_; }
  double flux_bound() const { return B_; }
  /// Field strength when the phase is the symmetric gauge of a constant field.
  std::optional<double> uniform_field() const { return uniform_; }

 private:
  std::string name_;
  Rule rule_;
  double B_;
  std::optional<double> uniform_;
};

/// Generalized Harper operator data. The flux parameter epsilon is supplied at assembly.
struct GHOModel {
  KernelSpec kernel;
  PhaseSpec phase;
  std::string label;
};

/// F(x, y, z) = phi(x, y) + phi(y, z) + phi(z, x).
inline double triangle_flux(const PhaseSpec& phase, LatticePoint x, LatticePoint y,
                            LatticePoint z) {
  return phase(x, y) + phase(y, z) + phase(z, x);
}

// ---------------------------------------------------------------------------
// Structural checks

struct KernelReport {
  double hermiticity_max_violation = 0.0;
  double decay_max_ratio = 0.0;
  bool pass = false;
};

inline KernelReport verify_kernel(const KernelSpec& kernel,
                                  const std::vector<std::pair<LatticePoint, LatticePoint>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("verify_kernel: empty sample set");
  KernelReport r;
  for (const auto& [x, y] : pairs) {
    const cplx hxy = kernel(x, y);
    const cplx hyx = kernel(y, x);
    r.hermiticity_max_violation = std::max(r.hermiticity_max_violation, std::abs(hxy - std::conj(hyx)));
    const double envelope = kernel.C() * std::exp(-kernel.beta() * dist2(x, y));
    r.decay_max_ratio = std::max(r.decay_max_ratio, std::abs(hxy) / envelope);
  }
  r.pass = r.hermiticity_max_violation <= 1e-12 && r.decay_max_ratio <= 1.0 + 1e-12;
  return r;
}

struct PhaseReport {
  double antisymmetry_max_violation = 0.0;
  double flux_max_excess = -std::numeric_limits<double>::infinity();
  bool pass = false;
};

inline PhaseReport verify_phase(
    const PhaseSpec& phase,
    const std::vector<std::tuple<LatticePoint, LatticePoint, LatticePoint>>& triples) {
  if (triples.empty()) throw std::invalid_argument("verify_phase: empty sample set");
  PhaseReport r;
  bool flux_ok = true;
  const double B = phase.flux_bound();
  for (const auto& [x, y, z] : triples) {
    for (auto [a, b] : {std::pair{x, y}, std::pair{y, z}, std::pair{z, x}}) {
      r.antisymmetry_max_violation =
          std::max(r.antisymmetry_max_violation, std::abs(phase(a, b) + phase(b, a)));
      r.antisymmetry_max_violation = std::max(r.antisymmetry_max_violation, std::abs(phase(a, a)));
    }
    const double area = triangle_area(x, y, z);
    const double excess = std::abs(triangle_flux(phase, x, y, z)) - B * area;
    r.flux_max_excess = std::max(r.flux_max_excess, excess);
    if (excess > 1e-9 * (1.0 + B * area)) flux_ok = false;
  }
  r.pass = r.antisymmetry_max_violation <= 1e-12 && flux_ok;
  return r;
}

// ---------------------------------------------------------------------------
// Builtin catalog

namespace builtin {

inline KernelSpec translation_invariant(std::string name, std::vector<Hop> hops, double C,
                                        double beta) {
  auto table = std::make_shared<std::unordered_map<LatticePoint, cplx>>();
  for (const auto& h : hops) (*table)[h.offset] += h.amplitude;
  auto rule = [table](LatticePoint x, LatticePoint y) -> cplx {
    const auto it = table->find(x - y);
    return it == table->end() ? cplx{0.0, 0.0} : it->second;
  };
  std::int64_t reach = 1;
  for (const auto& h : hops) reach = std::max<std::int64_t>(reach, std::ceil(norm2(h.offset)));
  KernelSpec k(std::move(name), std::move(rule), C, beta,
               std::max(reach, KernelSpec::default_cutoff(beta)));
  k.with_translation_table(std::move(hops));
  return k;
}

/// Nearest-neighbour kernel of amplitude t; declared (C, beta) = (t e, 1).
inline KernelSpec harper(double t = 1.0) {
  if (!(t > 0.0)) throw std::invalid_argument("harper: t must be positive");
  std::vector<Hop> hops = {{{1, 0}, t}, {{-1, 0}, t}, {{0, 1}, t}, {{0, -1}, t}};
  return translation_invariant("harper", std::move(hops), t * std::exp(1.0), 1.0);
}

/// Symmetric gauge of a constant field: phi(x, y) = (B/2)(x2 y1 - x1 y2), so |F| = B * area.
inline PhaseSpec constant_field(double B = 1.0) {
  if (!(B >= 0.0)) throw std::invalid_argument("constant_field: B must be nonnegative");
  auto rule = [B](LatticePoint x, LatticePoint y) {
    return 0.5 * B * static_cast<double>(x.x2 * y.x1 - x.x1 * y.x2);
  };
  return PhaseSpec("constant_field", rule, B, B);
}

/// Identically zero phase (epsilon drops out).
inline PhaseSpec zero_phase() {
  return PhaseSpec("zero", [](LatticePoint, LatticePoint) { return 0.0; }, 0.0);
}

namespace detail {
// Uniform double in [0, 1) from the top 53 bits; independent of the standard library's distributions.
inline double unit_uniform(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}
}  // namespace detail

/// Random Hermitian translation-invariant kernel with support |c|_inf <= range,
/// rescaled so that |t(c)| <= C exp(-beta |c|_2). Deterministic in `seed`.
inline KernelSpec random_translation_invariant(std::uint64_t seed, std::int64_t range, double C,
                                               double beta) {
  if (range < 1) throw std::invalid_argument("random_translation_invariant: range must be >= 1");
  if (!(C > 0.0)) throw std::invalid_argument("random_translation_invariant: C must be positive");
  if (!(beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("random_translation_invariant: beta must lie in (0, 1]");
  std::mt19937_64 gen(seed);
  std::vector<Hop> hops;
  for (std::int64_t i = -range; i <= range; ++i)
    for (std::int64_t j = -range; j <= range; ++j) {
      const LatticePoint c{i, j};
      if (c < LatticePoint{0, 0}) continue;  // filled from the mirror
      const double r = std::sqrt(detail::unit_uniform(gen));
      const double theta = 2.0 * std::numbers::pi * detail::unit_uniform(gen);
      const double scale = C * std::exp(-beta * norm2(c));
      if (c == LatticePoint{0, 0}) {
        hops.push_back({c, cplx(scale * (2.0 * r - 1.0), 0.0)});
        continue;
      }
      const cplx t = std::polar(scale * r, theta);
      hops.push_back({c, t});
      hops.push_back({-c, std::conj(t)});
    }
  return translation_invariant("random_ti", std::move(hops), C, beta);
}

/// h(x, y) = t(x - y) m(x) m(y) with m(x) = 1 + amplitude * cos(k . x); real and bounded.
inline KernelSpec modulated(const KernelSpec& base, double amplitude, double k1, double k2) {
  if (!base.translation_invariant())
    throw std::invalid_argument("modulated: base kernel must be translation invariant");
  if (!(std::abs(amplitude) < 1.0))
    throw std::invalid_argument("modulated: |amplitude| must be < 1");
  auto m = [=](LatticePoint x) {
    return 1.0 + amplitude * std::cos(k1 * double(x.x1) + k2 * double(x.x2));
  };
  auto rule = [base, m](LatticePoint x, LatticePoint y) { return base(x, y) * m(x) * m(y); };
  const double mmax = 1.0 + std::abs(amplitude);
  KernelSpec k("modulated", rule, base.C() * mmax * mmax, base.beta(), base.cutoff_radius());
  k.with_stencil(base.stencil());
  return k;
}

/// Phase of the field b(u) = B0 + amp exp(-|u|^2 / width^2): line integral of the
/// symmetric-gauge potential along the straight segment from y to x.
///
/// With a(u) = g(|u|) (-u2, u1) and curl a = b, one has a . du = g r^2 dtheta, so
/// phi(x, y) = (B0/2) cross(y, x) + (amp width^2 / 2) * integral of (1 - exp(-r^2/width^2)) dtheta
/// over the angle swept by the segment. The angular integrand lies in [0, 1]; it is integrated
/// by 64-panel composite Simpson with adaptive refinement.
inline PhaseSpec bump_field(double B0, double amp, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("bump_field: width must be positive");
  const double w2 = width * width;
  auto oriented = [=](LatticePoint x, LatticePoint y) {
    const double cross = static_cast<double>(y.x1 * x.x2 - y.x2 * x.x1);
    if (cross == 0.0) return 0.0;
    const double d1 = double(x.x1 - y.x1), d2 = double(x.x2 - y.x2);
    const double dot = double(y.x1 * x.x1 + y.x2 * x.x2);
    const double theta0 = std::atan2(double(y.x2), double(y.x1));
    const double sweep = std::atan2(cross, dot);
    // ray at angle t meets the line through y along d at distance |cross / (e(t) x d)|
    auto integrand = [=](double t) {
      const double den = std::cos(t) * d2 - std::sin(t) * d1;
      const double r2 = cross * cross / (den * den);
      return -std::expm1(-r2 / w2);
    };
    const double angular =
        quadrature::adaptive_simpson(integrand, theta0, theta0 + sweep, 1e-13 * std::abs(sweep), 64, 30);
    return 0.5 * B0 * cross + 0.5 * amp * w2 * angular;
  };
  // evaluate in a canonical orientation so that antisymmetry is exact
  auto rule = [oriented](LatticePoint x, LatticePoint y) {
    if (x == y) return 0.0;
    return x < y ? oriented(x, y) : -oriented(y, x);
  };
  return PhaseSpec("bump_field", rule, std::abs(B0) + std::abs(amp));
}

}  // namespace builtin

}  // namespace gho
