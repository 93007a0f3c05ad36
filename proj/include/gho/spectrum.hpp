#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gho/bloch.hpp"
#include "gho/eigensolver.hpp"
#include "gho/truncated_operator.hpp"

namespace gho {

enum class SpectrumMethod { truncation, bloch };

inline const char* to_string(SpectrumMethod m) {
  return m == SpectrumMethod::truncation ? "truncation" : "bloch";
}

struct SpectrumMeta {
  // truncation
  std::optional<std::int64_t> box_radius;
  std::optional<int> edge_margin;
  std::optional<double> edge_threshold;
  std::size_t removed = 0;
  bool all_removed = false;
  // bloch
  std::optional<std::int64_t> p, q;
  std::optional<int> m;
  /// Flux parameter actually used (differs from the requested one after rational approximation).
  double effective_epsilon = 0.0;
};

using Interval = std::pair<double, double>;

/// A finite sample of a spectrum: ascending values, plus band ranges when they are known.
struct SpectrumSample {
  std::vector<double> values;
  SpectrumMethod method = SpectrumMethod::truncation;
  double epsilon = 0.0;
  SpectrumMeta meta;
  /// Band ranges [lo, hi] (Bloch only); empty for truncations.
  std::vector<Interval> bands;
};

/// Sorted, pairwise disjoint union of closed intervals.
inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end());
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (iv.first > iv.second) throw std::invalid_argument("merge_intervals: empty interval");
    if (!out.empty() && iv.first <= out.back().second)
      out.back().second = std::max(out.back().second, iv.second);
    else
      out.push_back(iv);
  }
  return out;
}

/// The sample as a union of intervals: band ranges if present, otherwise degenerate points.
inline std::vector<Interval> as_intervals(const SpectrumSample& s) {
  if (!s.bands.empty()) return merge_intervals(s.bands);
  std::vector<Interval> v;
  v.reserve(s.values.size());
  for (double x : s.values) v.push_back({x, x});
  return merge_intervals(std::move(v));
}

inline SpectrumSample eigen_spectrum(const TruncatedOperator& op, DecomposeOptions opt = {}) {
  opt.vectors = false;
  const auto d = decompose(op, opt);
  SpectrumSample s;
  s.values.assign(d.values().data(), d.values().data() + d.values().size());
  s.method = SpectrumMethod::truncation;
  s.epsilon = op.epsilon;
  s.meta.box_radius = op.box.radius;
  s.meta.effective_epsilon = op.epsilon;
  return s;
}

inline SpectrumSample bloch_spectrum(const BandStructure& bs) {
  SpectrumSample s;
  s.values = bs.values();
  s.method = SpectrumMethod::bloch;
  s.epsilon = bs.epsilon;
  s.meta.p = bs.p;
  s.meta.q = bs.q;
  s.meta.m = bs.m;
  s.meta.effective_epsilon = bs.epsilon;
  s.bands = bs.band_ranges();
  return s;
}

struct EdgeFilter {
  int margin = 2;
  double threshold = 0.5;

  /// margin = max(2, N/5), threshold = 0.5.
  static EdgeFilter defaults(std::int64_t N) {
    return {static_cast<int>(std::max<std::int64_t>(2, N / 5)), 0.5};
  }
};

/// Boundary layer of width `margin`: rows whose point lies fewer than `margin` layers deep.
inline std::vector<char> boundary_layer(const BoxRegion& box, int margin) {
  std::vector<char> mask(box.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = box.depth(box.point_at(i)) < margin;
  return mask;
}

/// Drops eigenvalues whose eigenvector puts more than `threshold` of its mass in the boundary layer.
inline SpectrumSample filter_edge_states(const TruncatedOperator& op, const SpectralDecomposition& dec,
                                         EdgeFilter f) {
  if (!dec.has_vectors()) throw std::invalid_argument("filter_edge_states: eigenvectors required");
  if (dec.size() != op.dimension())
    throw std::invalid_argument("filter_edge_states: decomposition does not match the operator");
  if (f.margin <= 0 || f.margin >= op.box.radius)
    throw std::invalid_argument("filter_edge_states: margin must satisfy 0 < margin < N");
  if (!(f.threshold > 0.0 && f.threshold <= 1.0))
    throw std::invalid_argument("filter_edge_states: threshold must lie in (0, 1]");
  const auto mask = boundary_layer(op.box, f.margin);
  SpectrumSample s;
  s.method = SpectrumMethod::truncation;
  s.epsilon = op.epsilon;
  s.meta.box_radius = op.box.radius;
  s.meta.edge_margin = f.margin;
  s.meta.edge_threshold = f.threshold;
  s.meta.effective_epsilon = op.epsilon;
  for (std::size_t k = 0; k < dec.size(); ++k) {
    if (dec.weight(k, mask) > f.threshold)
      ++s.meta.removed;
    else
      s.values.push_back(dec.values()(Eigen::Index(k)));
  }
  s.meta.all_removed = s.values.empty();
  return s;
}

/// Truncated spectrum with boundary-localized eigenvalues removed.
inline SpectrumSample filtered_spectrum(const TruncatedOperator& op, EdgeFilter f) {
  DecomposeOptions opt;
  opt.vectors = true;
  return filter_edge_states(op, decompose(op, opt), f);
}

/// An open spectral gap (a, b) with d = (b - a)/4.
struct Gap {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
  /// Number of sample values at or below a (the cluster below the gap).
  std::size_t below = 0;

  double mid() const { return 0.5 * (a + b); }
  double width() const { return b - a; }
};

inline Gap make_gap(double a, double b, std::size_t below = 0) {
  if (!(b > a)) throw std::invalid_argument("make_gap: need b > a");
  return {a, b, (b - a) / 4.0, below};
}

/// Maximal open intervals of length > delta free of the sample, ordered by lower edge.
inline std::vector<Gap> detect_gaps(const SpectrumSample& s, double delta) {
  if (s.values.empty()) throw std::invalid_argument("detect_gaps: empty spectrum sample");
  if (!(delta > 0.0)) throw std::invalid_argument("detect_gaps: delta must be positive");
  const auto iv = as_intervals(s);
  std::vector<Gap> gaps;
  for (std::size_t i = 0; i + 1 < iv.size(); ++i) {
    const double a = iv[i].second, b = iv[i + 1].first;
    if (b - a > delta) {
      const auto below = std::size_t(std::upper_bound(s.values.begin(), s.values.end(), a) -
                                     s.values.begin());
      gaps.push_back(make_gap(a, b, below));
    }
  }
  return gaps;
}

/// The widest gap (first one on ties).
inline std::optional<Gap> largest_gap(const std::vector<Gap>& gaps) {
  if (gaps.empty()) return std::nullopt;
  return *std::max_element(gaps.begin(), gaps.end(),
                           [](const Gap& x, const Gap& y) { return x.width() < y.width(); });
}

inline double sup_spectrum(const SpectrumSample& s) {
  if (s.values.empty()) throw std::invalid_argument("sup_spectrum: empty spectrum sample");
  double v = *std::max_element(s.values.begin(), s.values.end());
  for (const auto& b : s.bands) v = std::max(v, b.second);
  return v;
}

}  // namespace gho
