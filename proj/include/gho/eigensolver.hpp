#pragma once

#include <lapacke.h>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gho/lattice.hpp"
#include "gho/truncated_operator.hpp"

namespace gho {

class EigenError : public std::runtime_error {
 public:
  EigenError(const std::string& what, std::size_t size, double frobenius, int info)
      : std::runtime_error(what + " (dimension " + std::to_string(size) + ", Frobenius norm " +
                           std::to_string(frobenius) + ", LAPACK info " + std::to_string(info) + ")"),
        size_(size), frobenius_(frobenius), info_(info) {}
  std::size_t size() const { return size_; }
  double frobenius() const { return frobenius_; }
  int info() const { return info_; }

 private:
  std::size_t size_;
  double frobenius_;
  int info_;
};

/// Eigenvalues (ascending) and, optionally, orthonormal eigenvectors of a Hermitian matrix.
/// The upper triangle is referenced. Purely real input takes the real symmetric path.
struct HermitianEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;  // empty unless requested
};

inline HermitianEigen hermitian_eigen(Eigen::MatrixXcd m, bool want_vectors) {
  const auto n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("hermitian_eigen: matrix must be square");
  HermitianEigen out;
  out.values.resize(n);
  if (n == 0) return out;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag()))
        throw EigenError("hermitian_eigen: non-finite entry", std::size_t(n), m.norm(), 0);

  const char jobz = want_vectors ? 'V' : 'N';
  const bool real = m.imag().cwiseAbs().maxCoeff() == 0.0;
  int info = 0;
  if (real) {
    Eigen::MatrixXd a = m.real();
    m.resize(0, 0);
    info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, jobz, 'U', lapack_int(n), a.data(), lapack_int(n),
                          out.values.data());
    if (info != 0) throw EigenError("hermitian_eigen: dsyevd failed", std::size_t(n), a.norm(), info);
    if (want_vectors) out.vectors = a.cast<cplx>();
  } else {
    info = LAPACKE_zheevd(LAPACK_COL_MAJOR, jobz, 'U', lapack_int(n),
                          reinterpret_cast<lapack_complex_double*>(m.data()), lapack_int(n),
                          out.values.data());
    if (info != 0) throw EigenError("hermitian_eigen: zheevd failed", std::size_t(n), m.norm(), info);
    if (want_vectors) out.vectors = std::move(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quarter-turn symmetry

/// Orbits of the quarter turn R(x) = c + rot90(x - c) on a box centred at c.
/// Every orbit except the centre has four points: orbit o is (R^k rep_o), k = 0..3.
struct QuarterTurnOrbits {
  std::vector<std::array<std::size_t, 4>> orbits;  // row indices of R^k rep
  std::size_t center = 0;                          // row index of c

  static LatticePoint rotate(LatticePoint x, LatticePoint c) {
    return {c.x1 - (x.x2 - c.x2), c.x2 + (x.x1 - c.x1)};
  }

  explicit QuarterTurnOrbits(const BoxRegion& box) {
    const std::size_t n = box.size();
    std::vector<char> seen(n, 0);
    center = box.index_of(box.center);
    seen[center] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (seen[i]) continue;
      std::array<std::size_t, 4> orb{};
      LatticePoint x = box.point_at(i);
      for (int k = 0; k < 4; ++k) {
        orb[k] = box.index_of(x);
        seen[orb[k]] = 1;
        x = rotate(x, box.center);
      }
      orbits.push_back(orb);
    }
  }
};

/// True when H(Rx, Ry) = H(x, y) for every pair, R the quarter turn about the box centre.
inline bool quarter_turn_invariant(const TruncatedOperator& op, double rel_tol = 1e-13) {
  const auto& H = op.entries;
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const std::size_t n = op.dimension();
  std::vector<Eigen::Index> rot(n);
  for (std::size_t i = 0; i < n; ++i)
    rot[i] = Eigen::Index(op.box.index_of(QuarterTurnOrbits::rotate(op.box.point_at(i), op.box.center)));
  for (Eigen::Index j = 0; j < Eigen::Index(n); ++j)
    for (Eigen::Index i = 0; i < Eigen::Index(n); ++i)
      if (std::abs(H(rot[i], rot[j]) - H(i, j)) > rel_tol * scale) return false;
  return true;
}

/// Spectral decomposition of a truncated operator, stored either densely or
/// block-wise in the four quarter-turn sectors. Eigenvalues are global and ascending.
class SpectralDecomposition {
 public:
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return std::size_t(values_.size()); }
  bool has_vectors() const { return has_vectors_; }
  bool symmetry_reduced() const { return reduced_; }

  /// Unit eigenvector belonging to values()(k), in the operator's row order.
  Eigen::VectorXcd vector(std::size_t k) const {
    require_vectors();
    if (!reduced_) return dense_.col(Eigen::Index(k));
    const auto [s, col] = where_[k];
    const auto& coeffs = blocks_[s].col(Eigen::Index(col));
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index(size()));
    const cplx w = sector_root(s);
    std::size_t o0 = 0;
    if (s == 0) {
      v(Eigen::Index(orbits_->center)) = coeffs(0);
      o0 = 1;
    }
    for (std::size_t o = 0; o < orbits_->orbits.size(); ++o) {
      cplx ph = 0.5;
      for (int r = 0; r < 4; ++r) {
        v(Eigen::Index(orbits_->orbits[o][r])) = coeffs(Eigen::Index(o + o0)) * ph;
        ph *= w;
      }
    }
    return v;
  }

  /// Squared norm of eigenvector k on the rows flagged by `mask`.
  double weight(std::size_t k, const std::vector<char>& mask) const {
    require_vectors();
    if (!reduced_) {
      double m = 0.0;
      for (Eigen::Index i = 0; i < dense_.rows(); ++i)
        if (mask[std::size_t(i)]) m += std::norm(dense_(i, Eigen::Index(k)));
      return m;
    }
    const auto [s, col] = where_[k];
    const auto& coeffs = blocks_[s].col(Eigen::Index(col));
    double m = 0.0;
    std::size_t o0 = 0;
    if (s == 0) {
      if (mask[orbits_->center]) m += std::norm(coeffs(0));
      o0 = 1;
    }
    for (std::size_t o = 0; o < orbits_->orbits.size(); ++o) {
      int hits = 0;
      for (int r = 0; r < 4; ++r) hits += mask[orbits_->orbits[o][r]] ? 1 : 0;
      if (hits) m += 0.25 * hits * std::norm(coeffs(Eigen::Index(o + o0)));
    }
    return m;
  }

  static SpectralDecomposition dense(const Eigen::MatrixXcd& h, bool want_vectors) {
    SpectralDecomposition d;
    auto e = hermitian_eigen(h, want_vectors);
    d.values_ = std::move(e.values);
    d.dense_ = std::move(e.vectors);
    d.has_vectors_ = want_vectors;
    return d;
  }

  static SpectralDecomposition quarter_turn(const TruncatedOperator& op, bool want_vectors) {
    SpectralDecomposition d;
    d.reduced_ = true;
    d.has_vectors_ = want_vectors;
    d.orbits_ = QuarterTurnOrbits(op.box);
    const auto& orb = d.orbits_->orbits;
    const auto& H = op.entries;
    const auto no = Eigen::Index(orb.size());
    std::vector<std::pair<double, std::pair<int, std::size_t>>> all;
    all.reserve(op.dimension());
    for (int s = 0; s < 4; ++s) {
      const cplx w = sector_root(s);
      const Eigen::Index off = s == 0 ? 1 : 0;
      Eigen::MatrixXcd block(no + off, no + off);
      if (s == 0) {
        const auto c = Eigen::Index(d.orbits_->center);
        block(0, 0) = H(c, c);
        for (Eigen::Index b = 0; b < no; ++b) {
          cplx acc = 0.0;
          for (int r = 0; r < 4; ++r) acc += H(c, Eigen::Index(orb[b][r]));
          block(0, b + 1) = 0.5 * acc;
          block(b + 1, 0) = std::conj(block(0, b + 1));
        }
      }
      for (Eigen::Index b = 0; b < no; ++b)
        for (Eigen::Index a = 0; a <= b; ++a) {
          const auto xa = Eigen::Index(orb[a][0]);
          cplx acc = 0.0, ph = 1.0;
          for (int r = 0; r < 4; ++r) {
            acc += H(xa, Eigen::Index(orb[b][r])) * ph;
            ph *= w;
          }
          block(a + off, b + off) = acc;
          block(b + off, a + off) = std::conj(acc);
        }
      auto e = hermitian_eigen(std::move(block), want_vectors);
      for (Eigen::Index k = 0; k < e.values.size(); ++k)
        all.push_back({e.values(k), {s, std::size_t(k)}});
      d.blocks_[s] = std::move(e.vectors);
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    d.values_.resize(Eigen::Index(all.size()));
    d.where_.resize(all.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
      d.values_(Eigen::Index(k)) = all[k].first;
      d.where_[k] = all[k].second;
    }
    return d;
  }

 private:
  static cplx sector_root(int s) {
    static const std::array<cplx, 4> roots = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    return roots[std::size_t(s)];
  }
  void require_vectors() const {
    if (!has_vectors_) throw std::logic_error("SpectralDecomposition: eigenvectors were not computed");
  }

  Eigen::VectorXd values_;
  bool has_vectors_ = false;
  bool reduced_ = false;
  Eigen::MatrixXcd dense_;
  std::optional<QuarterTurnOrbits> orbits_;
  std::array<Eigen::MatrixXcd, 4> blocks_;
  std::vector<std::pair<int, std::size_t>> where_;
};

struct DecomposeOptions {
  bool vectors = false;
  /// Try the quarter-turn block reduction (checked numerically before use).
  bool use_symmetry = true;
  /// Below this dimension the dense solver is used directly.
  std::size_t symmetry_min_dimension = 400;
};

inline SpectralDecomposition decompose(const TruncatedOperator& op, const DecomposeOptions& opt = {}) {
  if (opt.use_symmetry && op.dimension() >= opt.symmetry_min_dimension &&
      quarter_turn_invariant(op))
    return SpectralDecomposition::quarter_turn(op, opt.vectors);
  return SpectralDecomposition::dense(op.entries, opt.vectors);
}

}  // namespace gho
