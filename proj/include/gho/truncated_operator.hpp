#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gho/lattice.hpp"
#include "gho/model.hpp"

namespace gho {

class DimensionLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssemblyOptions {
  /// Largest admissible matrix dimension (2N+1)^2.
  std::size_t max_dimension = 4096;
};

/// Dense Hermitian restriction of h_epsilon to a lattice box.
/// Rows and columns follow BoxRegion::index_of (lexicographic in (x1, x2)).
struct TruncatedOperator {
  BoxRegion box;
  double epsilon = 0.0;
  Eigen::MatrixXcd entries;
  /// Largest |H(i,j) - conj(H(j,i))| seen before Hermitian averaging.
  double raw_asymmetry = 0.0;
  /// Operator-norm error bound from the kernel's hard cutoff.
  double tail_bound = 0.0;

  std::size_t dimension() const { return static_cast<std::size_t>(entries.rows()); }
  LatticePoint point(std::size_t i) const { return box.point_at(i); }
  std::size_t index(LatticePoint x) const { return box.index_of(x); }
  cplx operator()(LatticePoint x, LatticePoint y) const {
    return entries(static_cast<Eigen::Index>(index(x)), static_cast<Eigen::Index>(index(y)));
  }

  /// Asymmetry warning threshold for inexact kernel rules.
  bool asymmetry_warning() const { return raw_asymmetry > 1e-12; }
};

namespace detail {

inline void check_dimension(const BoxRegion& box, const AssemblyOptions& opt) {
  if (box.size() > opt.max_dimension)
    throw DimensionLimitError("assemble: box of radius " + std::to_string(box.radius) +
                              " needs dimension " + std::to_string(box.size()) +
                              ", above the configured limit " + std::to_string(opt.max_dimension));
}

// In place; large boxes cannot afford a temporary copy.
inline double hermitize(Eigen::MatrixXcd& m) {
  double asym = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const cplx a = m(i, j), b = std::conj(m(j, i));
      asym = std::max(asym, std::abs(a - b));
      m(i, j) = 0.5 * (a + b);
      m(j, i) = std::conj(m(i, j));
    }
    asym = std::max(asym, 2.0 * std::abs(m(j, j).imag()));
    m(j, j) = m(j, j).real();
  }
  return asym;
}

}  // namespace detail

/// Matrix of x, y -> exp(i eps phi(x, y)) h(x, y) on `box`.
inline TruncatedOperator assemble(const GHOModel& model, double epsilon, const BoxRegion& box,
                                  const AssemblyOptions& opt = {}) {
  detail::check_dimension(box, opt);
  const auto n = static_cast<Eigen::Index>(box.size());
  TruncatedOperator op;
  op.box = box;
  op.epsilon = epsilon;
  op.entries = Eigen::MatrixXcd::Zero(n, n);
  const auto& kernel = model.kernel;
  const auto& phase = model.phase;

  auto entry = [&](LatticePoint x, LatticePoint y) {
    const cplx h = kernel(x, y);
    if (h == cplx{0.0, 0.0}) return h;
    return std::polar(1.0, epsilon * phase(x, y)) * h;
  };

  if (!kernel.stencil().empty()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const LatticePoint x = box.point_at(static_cast<std::size_t>(i));
      for (const auto& c : kernel.stencil()) {
        const LatticePoint y = x - c;
        if (!box.contains(y)) continue;
        op.entries(i, static_cast<Eigen::Index>(box.index_of(y))) = entry(x, y);
      }
    }
  } else {
    const double R = static_cast<double>(kernel.cutoff_radius());
    for (Eigen::Index i = 0; i < n; ++i) {
      const LatticePoint x = box.point_at(static_cast<std::size_t>(i));
      for (Eigen::Index j = 0; j < n; ++j) {
        const LatticePoint y = box.point_at(static_cast<std::size_t>(j));
        if (dist2(x, y) > R) continue;
        op.entries(i, j) = entry(x, y);
      }
    }
  }
  op.raw_asymmetry = detail::hermitize(op.entries);
  op.tail_bound = kernel.tail_bound();
  return op;
}

/// U*_{c,eps} h_eps U_{c,eps} with (U g)(x) = exp(i eps phi(x, c)) g(x).
/// Entry (x, y) is multiplied by exp(-i eps phi(x, c) + i eps phi(y, c)).
inline TruncatedOperator gauge_conjugate(const TruncatedOperator& op, LatticePoint c,
                                         const PhaseSpec& phase) {
  TruncatedOperator out = op;
  const auto n = static_cast<Eigen::Index>(op.dimension());
  if (op.epsilon == 0.0) return out;
  Eigen::VectorXcd u(n);
  for (Eigen::Index i = 0; i < n; ++i)
    u(i) = std::polar(1.0, op.epsilon * phase(op.box.point_at(static_cast<std::size_t>(i)), c));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx v = op.entries(i, j);
      if (v != cplx{0.0, 0.0}) out.entries(i, j) = std::conj(u(i)) * v * u(j);
    }
  return out;
}

/// Largest |H(i,j) - conj(H(j,i))|.
inline double hermiticity_defect(const Eigen::MatrixXcd& m) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      worst = std::max(worst, std::abs(m(i, j) - std::conj(m(j, i))));
  return worst;
}

/// Maximum absolute row sum (an upper bound on the spectral norm of a Hermitian matrix).
inline double max_row_sum(const Eigen::MatrixXcd& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace gho
