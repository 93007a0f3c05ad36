#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gho/eigensolver.hpp"
#include "gho/model.hpp"
#include "gho/parallel.hpp"
#include "gho/quadrature.hpp"
#include "gho/spectrum.hpp"
#include "gho/truncated_operator.hpp"

namespace gho {

class ResolventError : public std::runtime_error {
 public:
  ResolventError(const std::string& what, double d) : std::runtime_error(what), d_(d) {}
  double distance() const { return d_; }

 private:
  double d_;
};

/// (H - z)^{-1} on a truncation together with dist(z, spectrum).
struct ResolventKernel {
  TruncatedOperator op;
  cplx z;
  Eigen::MatrixXcd G;
  double d = 0.0;
  double residual = 0.0;  // max |(H - z) G - I|

  /// The resolvent bound ||G||_2 <= 1/d, with ||G||_2 computed from the spectrum.
  double norm() const { return 1.0 / d; }
};

inline double spectral_distance(const Eigen::VectorXd& values, cplx z) {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values.size(); ++i) d = std::min(d, std::abs(cplx(values(i)) - z));
  return d;
}

inline ResolventKernel resolvent_kernel(const TruncatedOperator& op, cplx z) {
  const auto spec = decompose(op).values();
  const double d = spectral_distance(spec, z);
  if (!(d > 1e-8)) {
    std::ostringstream msg;
    msg << "resolvent_kernel: z lies within d = " << d << " of the spectrum";
    throw ResolventError(msg.str(), d);
  }
  const auto n = Eigen::Index(op.dimension());
  ResolventKernel rk;
  rk.op = op;
  rk.z = z;
  rk.d = d;
  Eigen::MatrixXcd A = op.entries;
  A.diagonal().array() -= z;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  rk.G = lu.solve(Eigen::MatrixXcd::Identity(n, n));
  Eigen::MatrixXcd R = A * rk.G;
  R.diagonal().array() -= 1.0;
  rk.residual = n == 0 ? 0.0 : R.cwiseAbs().maxCoeff();
  return rk;
}

// ---------------------------------------------------------------------------
// Tilted operator

/// Exponential weight w(x) = exp(mu |x - x0|_2) on the rows of `box`.
inline Eigen::VectorXd tilt_weights(const BoxRegion& box, double mu, LatticePoint x0) {
  Eigen::VectorXd w(Eigen::Index(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) w(Eigen::Index(i)) = std::exp(mu * dist2(box.point_at(i), x0));
  return w;
}

/// e^{mu|. - x0|} h e^{-mu|. - x0|} on the box.
inline Eigen::MatrixXcd tilted_operator(const Eigen::MatrixXcd& h, const BoxRegion& box, double mu, LatticePoint x0) {
  const auto w = tilt_weights(box, mu, x0);
  return w.cast<cplx>().asDiagonal() * h * w.cwiseInverse().cast<cplx>().asDiagonal();
}

struct TiltEstimate {
  double b = 0.0;              // ||B||_2 by power iteration on B^* B
  double row_sum_bound = 0.0;  // max_x sum_y |h(x, y)| |x - y| exp(mu |x - y|)
  int iterations = 0;
};

namespace detail {

// Largest singular value of a sparse matrix by power iteration on B^* B.
inline std::pair<double, int> sparse_norm(const Eigen::SparseMatrix<cplx>& B, double tol = 1e-13, int max_iter = 50000) {
  const auto n = B.cols();
  if (n == 0 || B.nonZeros() == 0) return {0.0, 0};
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(1.0 + 0.37 * std::sin(double(i)), 0.11 * std::cos(3.0 * double(i)));
  v.normalize();
  double sigma2 = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    Eigen::VectorXcd u = B.adjoint() * (B * v);
    const double next = u.norm();
    if (next == 0.0) return {0.0, it};
    v = u / next;
    if (std::abs(next - sigma2) <= tol * next) {
      sigma2 = next;
      break;
    }
    sigma2 = next;
  }
  return {std::sqrt(sigma2), it};
}

}  // namespace detail

/// b = ||(h_{mu,x0} - h) / mu|| for the unphased kernel on `box`.
inline TiltEstimate tilted_b_estimate(const KernelSpec& kernel, double mu, LatticePoint x0, const BoxRegion& box) {
  if (!(mu > 0.0 && mu <= kernel.beta() / 2.0))
    throw std::invalid_argument("tilted_b_estimate: mu must lie in (0, beta/2]");
  const auto n = Eigen::Index(box.size());
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<double> rows(std::size_t(n), 0.0);
  auto visit = [&](Eigen::Index i, LatticePoint x, LatticePoint y) {
    const cplx h = kernel(x, y);
    if (h == cplx{}) return;
    const double r = dist2(x, y);
    const double s = mu * (dist2(x, x0) - dist2(y, x0));
    trip.emplace_back(i, Eigen::Index(box.index_of(y)), h * (std::expm1(s) / mu));
    rows[std::size_t(i)] += std::abs(h) * r * std::exp(mu * r);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const LatticePoint x = box.point_at(std::size_t(i));
    if (!kernel.stencil().empty()) {
      for (const auto& c : kernel.stencil())
        if (box.contains(x - c)) visit(i, x, x - c);
    } else {
      for (Eigen::Index j = 0; j < n; ++j) {
        const LatticePoint y = box.point_at(std::size_t(j));
        if (dist2(x, y) <= double(kernel.cutoff_radius())) visit(i, x, y);
      }
    }
  }
  Eigen::SparseMatrix<cplx> B(n, n);
  B.setFromTriplets(trip.begin(), trip.end());
  TiltEstimate est;
  std::tie(est.b, est.iterations) = detail::sparse_norm(B);
  est.row_sum_bound = rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
  return est;
}

inline double admissible_mu(double beta, double d, double b) {
  if (!(beta > 0.0) || !(d > 0.0) || !(b > 0.0)) throw std::invalid_argument("admissible_mu: arguments must be positive");
  return std::min(beta / 2.0, d / (2.0 * b));
}

struct DecayReport {
  double max_ratio = 0.0;  // max |G(x, y)| d exp(mu |x - y|) / 2 over interior pairs
  LatticePoint argmax_x{}, argmax_y{};
  std::size_t interior_points = 0;
  bool pass = false;
};

/// Pairs are restricted to points at sup-distance >= 1/mu from the box boundary.
inline DecayReport decay_check(const ResolventKernel& rk, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("decay_check: mu must be positive");
  const auto& box = rk.op.box;
  const double layer = 1.0 / mu;
  std::vector<std::size_t> inner;
  for (std::size_t i = 0; i < box.size(); ++i)
    if (double(box.depth(box.point_at(i))) >= layer) inner.push_back(i);
  DecayReport r;
  r.interior_points = inner.size();
  for (std::size_t i : inner)
    for (std::size_t j : inner) {
      const LatticePoint x = box.point_at(i), y = box.point_at(j);
      const double ratio = std::abs(rk.G(Eigen::Index(i), Eigen::Index(j))) * rk.d * std::exp(mu * dist2(x, y)) / 2.0;
      if (ratio > r.max_ratio) {
        r.max_ratio = ratio;
        r.argmax_x = x;
        r.argmax_y = y;
      }
    }
  r.pass = r.max_ratio <= 1.0 + 1e-6;
  return r;
}

// ---------------------------------------------------------------------------
// Twisted parametrix

struct Parametrix {
  Eigen::MatrixXcd S;
  Eigen::MatrixXcd T;
  double d = 0.0;           // dist(z, spectrum of the zero-flux truncation)
  double residual = 0.0;    // max |(h_eps - z) S - I - eps T|
  double column_sum = 0.0;  // sup_y sum_x |T(x, y)|
};

/// S = e^{i eps phi} G_0 and T(x, y) = e^{i eps phi(x, y)} sum_u (e^{i eps F(x, u, y)} - 1)/eps (h(x, u) - z delta) G_0(u, y).
inline Parametrix twisted_parametrix(const GHOModel& model, double epsilon, cplx z, const BoxRegion& box,
                                     const AssemblyOptions& opt = {}) {
  const auto h0 = assemble(model, 0.0, box, opt);
  const auto rk = resolvent_kernel(h0, z);
  const auto n = Eigen::Index(box.size());
  Parametrix p;
  p.d = rk.d;
  p.T = Eigen::MatrixXcd::Zero(n, n);
  if (epsilon == 0.0) {
    p.S = rk.G;
  } else {
    Eigen::MatrixXd phi(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        phi(i, j) = i == j ? 0.0 : model.phase(box.point_at(std::size_t(i)), box.point_at(std::size_t(j)));
    p.S.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) p.S(i, j) = std::polar(1.0, epsilon * phi(i, j)) * rk.G(i, j);
    // the u = x term carries F(x, x, y) = 0, so only off-diagonal hops contribute
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index u = 0; u < n; ++u) {
        const cplx h = h0.entries(i, u);
        if (u == i || h == cplx{}) continue;
        for (Eigen::Index j = 0; j < n; ++j) {
          const double theta = epsilon * (phi(i, u) + phi(u, j) - phi(i, j));
          const double s = std::sin(0.5 * theta);
          const cplx q(-2.0 * s * s / epsilon, std::sin(theta) / epsilon);
          p.T(i, j) += q * h * rk.G(u, j);
        }
      }
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) p.T(i, j) *= std::polar(1.0, epsilon * phi(i, j));
  }
  const auto he = assemble(model, epsilon, box, opt);
  Eigen::MatrixXcd A = he.entries;
  A.diagonal().array() -= z;
  Eigen::MatrixXcd R = A * p.S - epsilon * p.T;
  R.diagonal().array() -= 1.0;
  p.residual = n == 0 ? 0.0 : R.cwiseAbs().maxCoeff();
  p.column_sum = n == 0 ? 0.0 : p.T.cwiseAbs().colwise().sum().maxCoeff();
  return p;
}

// ---------------------------------------------------------------------------
// Riesz gap operator

/// Positively oriented axis-aligned rectangle with Gauss-Legendre nodes on each side.
/// weights[k] already includes dz/dt.
struct GapContour {
  double x0 = 0.0, x1 = 0.0, half_height = 0.0;
  std::vector<cplx> nodes;
  std::vector<cplx> weights;
  double clearance = 0.0;  // min distance from nodes to the spectrum
};

inline GapContour rectangle_contour(double x0, double x1, double half_height, int nodes_per_side) {
  if (!(x1 > x0) || !(half_height > 0.0)) throw std::invalid_argument("rectangle_contour: degenerate rectangle");
  const auto rule = quadrature::gauss_legendre(nodes_per_side);
  GapContour c{x0, x1, half_height, {}, {}, 0.0};
  const cplx corners[4] = {{x0, -half_height}, {x1, -half_height}, {x1, half_height}, {x0, half_height}};
  for (int s = 0; s < 4; ++s) {
    const cplx A = corners[s], B = corners[(s + 1) % 4];
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      c.nodes.push_back(A + (B - A) * (0.5 * (rule.nodes[k] + 1.0)));
      c.weights.push_back(rule.weights[k] * 0.5 * (B - A));
    }
  }
  return c;
}

enum class RieszMethod { projection, contour };

struct RieszOptions {
  RieszMethod method = RieszMethod::projection;
  int nodes_per_side = 64;
  unsigned jobs = 1;
};

struct RieszResult {
  Eigen::MatrixXcd h1;
  double E1 = 0.0;         // sup of the spectrum of h1
  double below_sup = 0.0;  // largest eigenvalue of the operator below the gap
  double hermiticity = 0.0;
  std::vector<GapContour> contours;  // empty for the projection method
};

class GapClosedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// h1 = H P_below + (lambda - 1) P_above, by spectral projection or by the contour integrals
/// (i / 2 pi) int_{G1} z (H - z)^{-1} dz + (lambda - 1) (i / 2 pi) int_{G2} (H - z)^{-1} dz.
inline RieszResult riesz_gap_operator(const TruncatedOperator& op, const Gap& gap, double lambda,
                                      const RieszOptions& opt = {}) {
  if (!(gap.d > 0.0)) throw std::invalid_argument("riesz_gap_operator: gap needs d > 0");
  const auto eig = hermitian_eigen(op.entries, true);
  const auto& ev = eig.values;
  const auto n = ev.size();
  if (n == 0) throw std::invalid_argument("riesz_gap_operator: empty operator");
  if (!(lambda < ev(0))) throw std::invalid_argument("riesz_gap_operator: lambda must lie below the spectrum");
  const double cut = gap.mid();
  Eigen::Index nb = 0;
  while (nb < n && ev(nb) < cut) ++nb;
  if (nb == 0 || nb == n) throw GapClosedError("riesz_gap_operator: no spectrum on one side of the gap");
  const double E1 = ev(nb - 1), E2 = ev(nb);
  if (E2 - E1 < 4.0 * gap.d * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "riesz_gap_operator: eigenvalue separation " << (E2 - E1) << " across the gap is below 4d = " << 4.0 * gap.d;
    throw GapClosedError(msg.str());
  }
  RieszResult r;
  r.below_sup = E1;
  if (opt.method == RieszMethod::projection) {
    Eigen::VectorXd f(n);
    for (Eigen::Index k = 0; k < n; ++k) f(k) = k < nb ? ev(k) : lambda - 1.0;
    r.h1 = eig.vectors * f.cast<cplx>().asDiagonal() * eig.vectors.adjoint();
  } else {
    const double d = gap.d;
    const double split = 0.5 * (E1 + E2);
    r.contours.push_back(rectangle_contour(ev(0) - d, split, d, opt.nodes_per_side));
    r.contours.push_back(rectangle_contour(split, ev(n - 1) + d, d, opt.nodes_per_side));
    for (auto& c : r.contours) {
      c.clearance = std::numeric_limits<double>::infinity();
      for (const auto& z : c.nodes) c.clearance = std::min(c.clearance, spectral_distance(ev, z));
    }
    struct Node {
      cplx z, w, factor;
    };
    std::vector<Node> nodes;
    for (std::size_t k = 0; k < r.contours[0].nodes.size(); ++k) {
      const cplx z = r.contours[0].nodes[k];
      nodes.push_back({z, r.contours[0].weights[k], z});
    }
    for (std::size_t k = 0; k < r.contours[1].nodes.size(); ++k)
      nodes.push_back({r.contours[1].nodes[k], r.contours[1].weights[k], lambda - 1.0});
    const auto terms = parallel_map(nodes.size(), opt.jobs, [&](std::size_t k) {
      Eigen::MatrixXcd A = op.entries;
      A.diagonal().array() -= nodes[k].z;
      Eigen::MatrixXcd R = A.partialPivLu().solve(Eigen::MatrixXcd::Identity(n, n));
      return Eigen::MatrixXcd(nodes[k].factor * nodes[k].w * R);
    });
    r.h1 = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& t : terms) r.h1 += t;
    r.h1 *= cplx(0.0, 1.0 / (2.0 * std::numbers::pi));
  }
  r.hermiticity = (r.h1 - r.h1.adjoint()).cwiseAbs().maxCoeff();
  Eigen::MatrixXcd sym = 0.5 * (r.h1 + r.h1.adjoint());
  const auto v = hermitian_eigen(sym, false).values;
  r.E1 = v(v.size() - 1);
  return r;
}

}  // namespace gho
