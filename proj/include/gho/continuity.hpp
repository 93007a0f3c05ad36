#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gho/bloch.hpp"
#include "gho/parallel.hpp"
#include "gho/rational.hpp"
#include "gho/spectrum.hpp"
#include "gho/truncated_operator.hpp"

namespace gho {

// ---------------------------------------------------------------------------
// Hausdorff distance

namespace detail {

inline double point_to_sorted(double a, const std::vector<double>& B) {
  const auto it = std::lower_bound(B.begin(), B.end(), a);
  double d = std::numeric_limits<double>::infinity();
  if (it != B.end()) d = *it - a;
  if (it != B.begin()) d = std::min(d, a - *(it - 1));
  return d;
}

inline double directed(const std::vector<double>& A, const std::vector<double>& B) {
  double worst = 0.0;
  for (double a : A) worst = std::max(worst, point_to_sorted(a, B));
  return worst;
}

inline double point_to_intervals(double c, const std::vector<Interval>& B) {
  // first interval with lower end > c
  const auto it = std::upper_bound(B.begin(), B.end(), c,
                                   [](double v, const Interval& iv) { return v < iv.first; });
  double d = std::numeric_limits<double>::infinity();
  if (it != B.end()) d = it->first - c;
  if (it != B.begin()) {
    const auto& prev = *(it - 1);
    d = std::min(d, c <= prev.second ? 0.0 : c - prev.second);
  }
  return d;
}

// sup over the union A of the distance to the union B. The distance to B is piecewise linear,
// so its maximum on an interval of A sits at an endpoint or at the midpoint of a gap of B.
inline double directed(const std::vector<Interval>& A, const std::vector<Interval>& B) {
  double worst = 0.0;
  for (const auto& iv : A) {
    worst = std::max(worst, point_to_intervals(iv.first, B));
    worst = std::max(worst, point_to_intervals(iv.second, B));
  }
  for (std::size_t i = 0; i + 1 < B.size(); ++i) {
    const double m = 0.5 * (B[i].second + B[i + 1].first);
    const auto it = std::upper_bound(A.begin(), A.end(), m,
                                     [](double v, const Interval& iv) { return v < iv.first; });
    if (it != A.begin() && m <= (it - 1)->second) worst = std::max(worst, m - B[i].second);
  }
  return worst;
}

inline void require_sorted_nonempty(const std::vector<double>& v, const char* who) {
  if (v.empty()) throw std::invalid_argument(std::string(who) + ": empty set");
  if (!std::is_sorted(v.begin(), v.end()))
    throw std::invalid_argument(std::string(who) + ": values must be sorted");
}

}  // namespace detail

/// Hausdorff distance between two finite point sets given as ascending lists.
inline double hausdorff_distance(const std::vector<double>& A, const std::vector<double>& B) {
  detail::require_sorted_nonempty(A, "hausdorff_distance");
  detail::require_sorted_nonempty(B, "hausdorff_distance");
  return std::max(detail::directed(A, B), detail::directed(B, A));
}

/// Hausdorff distance between the value sets of two samples.
inline double hausdorff_distance(const SpectrumSample& A, const SpectrumSample& B) {
  return hausdorff_distance(A.values, B.values);
}

/// Hausdorff distance between two finite unions of closed intervals.
inline double hausdorff_distance(const std::vector<Interval>& A, const std::vector<Interval>& B) {
  if (A.empty() || B.empty()) throw std::invalid_argument("hausdorff_distance: empty set");
  const auto a = merge_intervals(A), b = merge_intervals(B);
  return std::max(detail::directed(a, b), detail::directed(b, a));
}

/// Hausdorff distance between samples read as sets: band ranges where known, points otherwise.
inline double set_hausdorff_distance(const SpectrumSample& A, const SpectrumSample& B) {
  if (A.values.empty() || B.values.empty())
    throw std::invalid_argument("set_hausdorff_distance: empty spectrum sample");
  return hausdorff_distance(as_intervals(A), as_intervals(B));
}

// ---------------------------------------------------------------------------
// Spectra as functions of epsilon

using SpectrumOracle = std::function<SpectrumSample(double)>;

struct TruncationMethod {
  std::int64_t N = 20;
  std::optional<EdgeFilter> filter;
  std::size_t max_dimension = 4096;
};

struct BlochMethod {
  int m = 64;
  BlochZone zone = BlochZone::magnetic;
  /// Flux per cell is replaced by its best rational approximation with this denominator cap.
  std::int64_t max_den = 64;
};

using SweepMethod = std::variant<TruncationMethod, BlochMethod>;

inline std::string describe(const SweepMethod& m) {
  if (const auto* t = std::get_if<TruncationMethod>(&m))
    return "truncation(N=" + std::to_string(t->N) +
           (t->filter ? ",margin=" + std::to_string(t->filter->margin) : std::string()) + ")";
  const auto& b = std::get<BlochMethod>(m);
  return "bloch(m=" + std::to_string(b.m) + ",qmax=" + std::to_string(b.max_den) +
         (b.zone == BlochZone::reduced ? ",reduced" : "") + ")";
}

/// Field strength of a constant-field model; throws for anything else.
inline double uniform_field_of(const GHOModel& model) {
  const auto B = model.phase.uniform_field();
  if (!B || !(*B > 0.0))
    throw std::invalid_argument("Bloch method needs a constant_field phase with B > 0, got '" +
                                model.phase.name() + "'");
  return *B;
}

inline SpectrumOracle make_oracle(const GHOModel& model, const SweepMethod& method) {
  if (const auto* t = std::get_if<TruncationMethod>(&method)) {
    return [model, tm = *t](double eps) {
      AssemblyOptions ao;
      ao.max_dimension = tm.max_dimension;
      const auto op = assemble(model, eps, BoxRegion({0, 0}, tm.N), ao);
      return tm.filter ? filtered_spectrum(op, *tm.filter) : eigen_spectrum(op);
    };
  }
  const auto b = std::get<BlochMethod>(method);
  const double B = uniform_field_of(model);
  if (!model.kernel.translation_invariant())
    throw std::invalid_argument("Bloch method needs a translation-invariant kernel");
  return [kernel = model.kernel, b, B](double eps) {
    const double alpha = eps * B / (2.0 * std::numbers::pi);
    const Rational r = best_rational(alpha, b.max_den);
    auto s = bloch_spectrum(bloch_bands(kernel, r.num, r.den, b.m, B, b.zone));
    s.epsilon = eps;
    return s;
  };
}

class SweepError : public std::runtime_error {
 public:
  SweepError(double eps, const std::string& what)
      : std::runtime_error("spectrum at epsilon = " + std::to_string(eps) + " failed: " + what), eps_(eps) {}
  double epsilon() const { return eps_; }

 private:
  double eps_;
};

inline std::vector<SpectrumSample> spectral_sweep(const SpectrumOracle& oracle,
                                                  const std::vector<double>& epsilons, unsigned jobs = 1) {
  if (epsilons.empty()) throw std::invalid_argument("spectral_sweep: empty epsilon list");
  return parallel_map(epsilons.size(), jobs, [&](std::size_t i) {
    try {
      return oracle(epsilons[i]);
    } catch (const std::exception& e) {
      throw SweepError(epsilons[i], e.what());
    }
  });
}

inline std::vector<SpectrumSample> spectral_sweep(const GHOModel& model, const std::vector<double>& epsilons,
                                                  const SweepMethod& method, unsigned jobs = 1) {
  return spectral_sweep(make_oracle(model, method), epsilons, jobs);
}

// ---------------------------------------------------------------------------
// Scaling series and fits

struct SeriesContext {
  double eps0 = 0.0;
  std::string label;
  std::string method;
};

/// Observations against |epsilon - eta|, deltas strictly decreasing.
struct ScalingSeries {
  std::vector<double> deltas;
  std::vector<double> observations;
  SeriesContext context;
  /// Requested offsets before rational snapping (same order); informational.
  std::vector<double> nominal_deltas;
  /// Signed values when the observed quantity can be negative (observations holds its positive part).
  std::vector<double> signed_observations;

  void validate() const {
    if (deltas.size() != observations.size())
      throw std::invalid_argument("ScalingSeries: deltas and observations differ in length");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      if (!(deltas[i] > 0.0)) throw std::invalid_argument("ScalingSeries: deltas must be positive");
      if (i > 0 && !(deltas[i] < deltas[i - 1]))
        throw std::invalid_argument("ScalingSeries: deltas must be strictly decreasing");
      if (!(observations[i] >= 0.0))
        throw std::invalid_argument("ScalingSeries: observations must be nonnegative");
    }
  }
};

struct FitResult {
  double exponent = 0.0;
  double constant = 0.0;
  /// Largest |log observation - fitted log observation|.
  double residual = 0.0;
  int points_used = 0;
  int points_excluded = 0;
};

/// Least-squares line through (log delta, log observation), dropping observations <= noise_floor.
inline FitResult holder_fit(const ScalingSeries& s, double noise_floor = 1e-9) {
  s.validate();
  std::vector<double> lx, ly;
  FitResult f;
  for (std::size_t i = 0; i < s.deltas.size(); ++i) {
    if (s.observations[i] > noise_floor) {
      lx.push_back(std::log(s.deltas[i]));
      ly.push_back(std::log(s.observations[i]));
    } else {
      ++f.points_excluded;
    }
  }
  if (lx.size() < 2)
    throw std::invalid_argument("holder_fit: fewer than 2 observations above the noise floor");
  const double n = double(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("holder_fit: all deltas coincide");
  f.exponent = sxy / sxx;
  const double intercept = my - f.exponent * mx;
  f.constant = std::exp(intercept);
  for (std::size_t i = 0; i < lx.size(); ++i)
    f.residual = std::max(f.residual, std::abs(ly[i] - (intercept + f.exponent * lx[i])));
  f.points_used = int(lx.size());
  return f;
}

/// E(eps0) - (E(eps0 + eps) + E(eps0 - eps)) / 2.
inline double midpoint_defect(const std::function<double(double)>& Eplus, double eps0, double eps) {
  if (!(std::abs(eps) <= 0.5)) throw std::invalid_argument("midpoint_defect: need |eps| <= 1/2");
  return Eplus(eps0) - 0.5 * (Eplus(eps0 + eps) + Eplus(eps0 - eps));
}

struct Shape {
  enum Kind { sqrt, linear_log, power } kind = sqrt;
  double alpha = 0.5;  // power only

  static Shape square_root() { return {sqrt, 0.5}; }
  static Shape delta_log() { return {linear_log, 1.0}; }
  static Shape pow(double a) { return {power, a}; }

  double operator()(double delta) const {
    switch (kind) {
      case sqrt: return std::sqrt(delta);
      case linear_log: return delta * std::abs(std::log(delta));
      case power: return std::pow(delta, alpha);
    }
    return 0.0;
  }
  std::string name() const {
    switch (kind) {
      case sqrt: return "sqrt";
      case linear_log: return "linear_log";
      case power: return "pow(" + std::to_string(alpha) + ")";
    }
    return "";
  }
};

struct ModulusCheck {
  double K_min = 0.0;
  bool pass = false;
};

/// Smallest K with observation <= K * shape(delta) at every point.
inline ModulusCheck modulus_check(const ScalingSeries& s, Shape shape) {
  s.validate();
  ModulusCheck r;
  for (std::size_t i = 0; i < s.deltas.size(); ++i) {
    if (s.deltas[i] > 0.5) throw std::invalid_argument("modulus_check: deltas must be <= 1/2");
    r.K_min = std::max(r.K_min, s.observations[i] / shape(s.deltas[i]));
  }
  r.pass = std::isfinite(r.K_min);
  return r;
}

// ---------------------------------------------------------------------------
// Rational offsets for Bloch scaling runs

/// One offset of a scaling run: eps0 +- effective lands on a flux with a small denominator.
struct PlannedOffset {
  double nominal = 0.0;
  double effective = 0.0;
  double eps_plus = 0.0;
  std::optional<double> eps_minus;
  Rational alpha_plus;
  std::optional<Rational> alpha_minus;
};

/// Snaps each requested offset (in epsilon units) to a nearby one for which the flux
/// eps B/(2 pi) is rational with a small denominator on the requested side(s).
/// eps0 itself must correspond to a rational flux.
inline std::vector<PlannedOffset> plan_offsets(double eps0, const std::vector<double>& deltas, double B,
                                               bool two_sided, const OffsetSearch& opt = {}) {
  const double to_alpha = B / (2.0 * std::numbers::pi);
  const Rational base = recover_rational(eps0 * to_alpha);
  std::vector<PlannedOffset> out;
  for (double d : deltas) {
    if (!(d > 0.0)) throw std::invalid_argument("plan_offsets: offsets must be positive");
    const auto r = rational_offset(base, d * to_alpha, two_sided, opt);
    PlannedOffset p;
    p.nominal = d;
    p.effective = r.offset.value() / to_alpha;
    p.alpha_plus = r.plus;
    p.eps_plus = r.plus.value() / to_alpha;
    if (r.minus) {
      p.alpha_minus = r.minus;
      p.eps_minus = r.minus->value() / to_alpha;
    }
    out.push_back(p);
  }
  return out;
}

/// Offsets used verbatim (no rational snapping).
inline std::vector<PlannedOffset> plain_offsets(double eps0, const std::vector<double>& deltas, bool two_sided) {
  std::vector<PlannedOffset> out;
  for (double d : deltas) {
    if (!(d > 0.0)) throw std::invalid_argument("plain_offsets: offsets must be positive");
    PlannedOffset p;
    p.nominal = p.effective = d;
    p.eps_plus = eps0 + d;
    if (two_sided) p.eps_minus = eps0 - d;
    out.push_back(p);
  }
  return out;
}

namespace detail {
inline ScalingSeries start_series(double eps0, const std::vector<PlannedOffset>& offs, std::string label,
                                  std::string method) {
  ScalingSeries s;
  s.context = {eps0, std::move(label), std::move(method)};
  for (const auto& o : offs) {
    s.deltas.push_back(o.effective);
    s.nominal_deltas.push_back(o.nominal);
  }
  return s;
}
inline void require_decreasing(const std::vector<PlannedOffset>& offs) {
  for (std::size_t i = 1; i < offs.size(); ++i)
    if (!(offs[i].effective < offs[i - 1].effective))
      throw std::invalid_argument("scaling series: offsets must be strictly decreasing");
}
}  // namespace detail

/// Hausdorff distances between sigma(eps0) and sigma(eps0 + delta).
/// Band ranges are used when the oracle provides them.
inline ScalingSeries hausdorff_series(const SpectrumOracle& oracle, double eps0,
                                      const std::vector<PlannedOffset>& offs, unsigned jobs = 1,
                                      std::string label = {}, std::string method = {}) {
  detail::require_decreasing(offs);
  std::vector<double> eps{eps0};
  for (const auto& o : offs) eps.push_back(o.eps_plus);
  const auto spectra = spectral_sweep(oracle, eps, jobs);
  auto s = detail::start_series(eps0, offs, std::move(label), std::move(method));
  for (std::size_t i = 0; i < offs.size(); ++i)
    s.observations.push_back(set_hausdorff_distance(spectra[0], spectra[i + 1]));
  return s;
}

/// Top-of-spectrum data around eps0: E+(eps0), E+(eps0 + delta) and, when two-sided, E+(eps0 - delta).
struct EplusSamples {
  double center = 0.0;
  std::vector<double> plus;
  std::vector<double> minus;
};

inline EplusSamples sample_eplus(const SpectrumOracle& oracle, double eps0,
                                 const std::vector<PlannedOffset>& offs, unsigned jobs = 1) {
  std::vector<double> eps{eps0};
  for (const auto& o : offs) eps.push_back(o.eps_plus);
  for (const auto& o : offs)
    if (o.eps_minus) eps.push_back(*o.eps_minus);
  const auto spectra = spectral_sweep(oracle, eps, jobs);
  EplusSamples e;
  e.center = sup_spectrum(spectra[0]);
  std::size_t k = 1;
  for (std::size_t i = 0; i < offs.size(); ++i) e.plus.push_back(sup_spectrum(spectra[k++]));
  for (; k < spectra.size(); ++k) e.minus.push_back(sup_spectrum(spectra[k]));
  return e;
}

/// |E+(eps0 + delta) - E+(eps0)|.
inline ScalingSeries eplus_series(const EplusSamples& e, double eps0, const std::vector<PlannedOffset>& offs,
                                  std::string label = {}, std::string method = {}) {
  detail::require_decreasing(offs);
  auto s = detail::start_series(eps0, offs, std::move(label), std::move(method));
  for (std::size_t i = 0; i < offs.size(); ++i) s.observations.push_back(std::abs(e.plus[i] - e.center));
  return s;
}

/// Midpoint defect E+(eps0) - (E+(eps0 + delta) + E+(eps0 - delta)) / 2; negative defects
/// are kept in signed_observations and enter observations as 0.
inline ScalingSeries midpoint_series(const EplusSamples& e, double eps0, const std::vector<PlannedOffset>& offs,
                                     std::string label = {}, std::string method = {}) {
  detail::require_decreasing(offs);
  if (e.minus.size() != offs.size())
    throw std::invalid_argument("midpoint_series: two-sided samples required");
  auto s = detail::start_series(eps0, offs, std::move(label), std::move(method));
  for (std::size_t i = 0; i < offs.size(); ++i) {
    const double defect = e.center - 0.5 * (e.plus[i] + e.minus[i]);
    s.signed_observations.push_back(defect);
    s.observations.push_back(std::max(0.0, defect));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Gap edges

class GapClosed : public std::runtime_error {
 public:
  GapClosed(double delta, double eps)
      : std::runtime_error("tracked gap closed (narrower than 2d) at delta = " + std::to_string(delta) +
                           ", epsilon = " + std::to_string(eps)),
        delta_(delta), eps_(eps) {}
  double delta() const { return delta_; }
  double epsilon() const { return eps_; }

 private:
  double delta_;
  double eps_;
};

struct GapTrackRow {
  double delta = 0.0;  // effective offset
  double nominal = 0.0;
  double e1_plus = 0.0, e2_plus = 0.0;
  std::optional<double> e1_minus, e2_minus;
};

struct GapTrack {
  Gap initial;
  std::vector<GapTrackRow> rows;  // ascending in delta; first row is delta = 0
};

/// Follows `gap` outwards along the offsets, matching at each step the gap of width > 2d
/// that overlaps the previous one and has the nearest midpoint.
inline GapTrack gap_edge_track(const SpectrumOracle& oracle, const Gap& gap,
                               std::vector<PlannedOffset> offs, unsigned jobs = 1) {
  if (!(gap.d > 0.0)) throw std::invalid_argument("gap_edge_track: gap must have d > 0");
  std::sort(offs.begin(), offs.end(),
            [](const PlannedOffset& a, const PlannedOffset& b) { return a.effective < b.effective; });
  std::vector<double> eps;
  for (const auto& o : offs) eps.push_back(o.eps_plus);
  for (const auto& o : offs)
    if (o.eps_minus) eps.push_back(*o.eps_minus);
  const auto spectra = spectral_sweep(oracle, eps, jobs);

  auto follow = [&](Gap prev, std::size_t i, std::size_t k) {
    const auto gaps = detect_gaps(spectra[k], 2.0 * gap.d);
    const Gap* best = nullptr;
    for (const auto& g : gaps) {
      if (!(g.a < prev.b && g.b > prev.a)) continue;
      if (!best || std::abs(g.mid() - prev.mid()) < std::abs(best->mid() - prev.mid())) best = &g;
    }
    if (!best) throw GapClosed(offs[i].effective, eps[k]);
    return *best;
  };

  GapTrack t;
  t.initial = gap;
  t.rows.push_back({0.0, 0.0, gap.a, gap.b, std::nullopt, std::nullopt});
  Gap plus = gap, minus = gap;
  std::size_t km = offs.size();
  for (std::size_t i = 0; i < offs.size(); ++i) {
    GapTrackRow row;
    row.delta = offs[i].effective;
    row.nominal = offs[i].nominal;
    plus = follow(plus, i, i);
    row.e1_plus = plus.a;
    row.e2_plus = plus.b;
    if (offs[i].eps_minus) {
      minus = follow(minus, i, km++);
      row.e1_minus = minus.a;
      row.e2_minus = minus.b;
    }
    t.rows.push_back(row);
  }
  if (t.rows.size() > 1 && t.rows[1].e1_minus) {
    t.rows[0].e1_minus = gap.a;
    t.rows[0].e2_minus = gap.b;
  }
  return t;
}

/// Convenience form: the model's spectra via `method`, offsets eps0 +- delta used verbatim.
inline GapTrack gap_edge_track(const GHOModel& model, const SweepMethod& method, double eps0, const Gap& gap,
                               const std::vector<double>& deltas, bool two_sided = true, unsigned jobs = 1) {
  return gap_edge_track(make_oracle(model, method), gap, plain_offsets(eps0, deltas, two_sided), jobs);
}

/// |E_j(eps0 + delta) - E_j(eps0)| for j = 1 (lower edge) or 2 (upper edge), on the + side.
inline ScalingSeries edge_series(const GapTrack& t, int edge, double eps0, std::string label = {},
                                 std::string method = {}) {
  if (edge != 1 && edge != 2) throw std::invalid_argument("edge_series: edge must be 1 or 2");
  ScalingSeries s;
  s.context = {eps0, std::move(label), std::move(method)};
  const double ref = edge == 1 ? t.initial.a : t.initial.b;
  for (auto it = t.rows.rbegin(); it != t.rows.rend(); ++it) {
    if (it->delta == 0.0) continue;
    s.deltas.push_back(it->delta);
    s.nominal_deltas.push_back(it->nominal);
    s.observations.push_back(std::abs((edge == 1 ? it->e1_plus : it->e2_plus) - ref));
  }
  return s;
}

}  // namespace gho
