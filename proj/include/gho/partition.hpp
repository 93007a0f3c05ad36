#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gho/eigensolver.hpp"
#include "gho/lattice.hpp"
#include "gho/truncated_operator.hpp"

namespace gho {

/// Finitely supported lattice function; zero amplitudes are not stored.
class FiniteState {
 public:
  FiniteState() = default;
  explicit FiniteState(const std::map<LatticePoint, cplx>& amplitudes) {
    for (const auto& [x, v] : amplitudes) set(x, v);
  }

  void set(LatticePoint x, cplx v) {
    if (v == cplx{}) amp_.erase(x);
    else amp_[x] = v;
  }
  void add(LatticePoint x, cplx v) { set(x, (*this)(x) + v); }
  cplx operator()(LatticePoint x) const {
    const auto it = amp_.find(x);
    return it == amp_.end() ? cplx{} : it->second;
  }
  const std::map<LatticePoint, cplx>& support() const { return amp_; }
  bool empty() const { return amp_.empty(); }
  std::size_t size() const { return amp_.size(); }

  double norm() const {
    double s = 0.0;
    for (const auto& [x, v] : amp_) s += std::norm(v);
    return std::sqrt(s);
  }

  /// Amplitudes on the rows of `box`; points outside the box are an error.
  Eigen::VectorXcd on_box(const BoxRegion& box) const {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index(box.size()));
    for (const auto& [x, a] : amp_) {
      if (!box.contains(x)) throw std::invalid_argument("FiniteState: support leaves the box");
      v(Eigen::Index(box.index_of(x))) = a;
    }
    return v;
  }

 private:
  std::map<LatticePoint, cplx> amp_;
};

using LatticeFunction = std::function<double(LatticePoint)>;

/// f(x) = clamp(2 - |x - a|_inf / N, 0, 1): 1 on C(a, N), 0 outside C(a, 2N), Lipschitz 1/N.
inline LatticeFunction plateau_function(std::int64_t N, LatticePoint a) {
  if (N < 1) throw std::invalid_argument("plateau_function: N must be >= 1");
  return [N, a](LatticePoint x) {
    const double r = double(dist_sup(x, a)) / double(N);
    return std::clamp(2.0 - r, 0.0, 1.0);
  };
}

namespace detail {

// |phi|^2 on a dense rectangle with 2-D prefix sums for window masses.
class MassGrid {
 public:
  MassGrid(std::int64_t x0, std::int64_t y0, std::int64_t w, std::int64_t h)
      : x0_(x0), y0_(y0), w_(w), h_(h), m_(std::size_t(w * h), 0.0), pre_(std::size_t((w + 1) * (h + 1)), 0.0) {}

  void set(LatticePoint p, double v) { m_[idx(p.x1 - x0_, p.x2 - y0_)] = v; }

  void rebuild() {
    for (std::int64_t i = 0; i < w_; ++i)
      for (std::int64_t j = 0; j < h_; ++j)
        pre_[pidx(i + 1, j + 1)] = m_[idx(i, j)] + pre_[pidx(i, j + 1)] + pre_[pidx(i + 1, j)] - pre_[pidx(i, j)];
  }

  /// Mass inside C(a, N), clipped to the grid.
  double window(LatticePoint a, std::int64_t N) const {
    const auto i0 = std::clamp<std::int64_t>(a.x1 - N - x0_, 0, w_), i1 = std::clamp<std::int64_t>(a.x1 + N + 1 - x0_, 0, w_);
    const auto j0 = std::clamp<std::int64_t>(a.x2 - N - y0_, 0, h_), j1 = std::clamp<std::int64_t>(a.x2 + N + 1 - y0_, 0, h_);
    if (i1 <= i0 || j1 <= j0) return 0.0;
    return pre_[pidx(i1, j1)] - pre_[pidx(i0, j1)] - pre_[pidx(i1, j0)] + pre_[pidx(i0, j0)];
  }

 private:
  std::size_t idx(std::int64_t i, std::int64_t j) const { return std::size_t(i * h_ + j); }
  std::size_t pidx(std::int64_t i, std::int64_t j) const { return std::size_t(i * (h_ + 1) + j); }
  std::int64_t x0_, y0_, w_, h_;
  std::vector<double> m_, pre_;
};

}  // namespace detail

/// Greedy centres: a_j maximizes ||Phi_j chi_{a,N}|| over the support's bounding box inflated by N
/// (ties to the lexicographically smallest a), then Phi_{j+1} = Phi_j (1 - chi_{a_j, 9N}).
inline std::vector<LatticePoint> greedy_centers(const FiniteState& phi, std::int64_t N) {
  if (phi.empty()) throw std::invalid_argument("greedy_centers: zero state");
  if (N < 1) throw std::invalid_argument("greedy_centers: N must be >= 1");
  std::int64_t xmin = std::numeric_limits<std::int64_t>::max(), xmax = std::numeric_limits<std::int64_t>::min();
  std::int64_t ymin = xmin, ymax = xmax;
  for (const auto& [x, v] : phi.support()) {
    xmin = std::min(xmin, x.x1); xmax = std::max(xmax, x.x1);
    ymin = std::min(ymin, x.x2); ymax = std::max(ymax, x.x2);
  }
  const std::int64_t X0 = xmin - N, Y0 = ymin - N;
  const std::int64_t W = xmax - xmin + 2 * N + 1, H = ymax - ymin + 2 * N + 1;
  detail::MassGrid grid(X0, Y0, W, H);
  std::map<LatticePoint, double> residual;
  for (const auto& [x, v] : phi.support()) {
    residual[x] = std::norm(v);
    grid.set(x, std::norm(v));
  }
  std::vector<LatticePoint> centers;
  while (!residual.empty()) {
    grid.rebuild();
    double best = 0.0;
    for (std::int64_t i = 0; i < W; ++i)
      for (std::int64_t j = 0; j < H; ++j) best = std::max(best, grid.window({X0 + i, Y0 + j}, N));
    LatticePoint chosen{};
    bool found = false;
    for (std::int64_t i = 0; i < W && !found; ++i)
      for (std::int64_t j = 0; j < H; ++j) {
        const LatticePoint a{X0 + i, Y0 + j};
        if (grid.window(a, N) >= best * (1.0 - 1e-12)) {
          chosen = a;
          found = true;
          break;
        }
      }
    centers.push_back(chosen);
    for (auto it = residual.begin(); it != residual.end();) {
      if (dist_sup(it->first, chosen) <= 9 * N) {
        grid.set(it->first, 0.0);
        it = residual.erase(it);
      } else {
        ++it;
      }
    }
  }
  return centers;
}

/// f_{N,Phi} = sum of plateau functions at the centres.
inline LatticeFunction partition_sum(std::int64_t N, std::vector<LatticePoint> centers) {
  if (N < 1) throw std::invalid_argument("partition_sum: N must be >= 1");
  return [N, centers = std::move(centers)](LatticePoint x) {
    double s = 0.0;
    for (const auto& a : centers) {
      const double r = double(dist_sup(x, a)) / double(N);
      s += std::clamp(2.0 - r, 0.0, 1.0);
    }
    return s;
  };
}

struct PartitionChecks {
  double min_center_distance = std::numeric_limits<double>::infinity();      // Euclidean
  double min_center_distance_sup = std::numeric_limits<double>::infinity();  // sup norm
  double min_support_distance = std::numeric_limits<double>::infinity();     // rho
  double exp_sum = 0.0;    // max_j sum_{l != j} exp(-beta rho_jl)
  double exp_ratio = 0.0;  // exp_sum / (exp(-beta N) / beta^2)
  bool plateau_supports_disjoint = true;
  bool range_ok = true;          // 0 <= f <= 1 on the probes
  double lipschitz_max = 0.0;    // max |f(x) - f(y)| * N / |x - y|_2 over probe pairs
  bool lipschitz_ok = true;
  double mass_ratio = 0.0;       // ||Phi f|| / ||Phi||
};

struct PartitionCertificate {
  std::int64_t N = 1;
  std::vector<LatticePoint> centers;
  LatticeFunction f;
  PartitionChecks checks;

  bool distance_ok() const { return checks.min_center_distance >= 8.0 * double(N); }
  bool rho_ok() const { return checks.min_support_distance >= 2.0 * double(N); }
  bool mass_ok() const { return checks.mass_ratio >= 1.0 / 9.0; }
  bool pass() const {
    return distance_ok() && rho_ok() && mass_ok() && checks.lipschitz_ok && checks.range_ok &&
           checks.plateau_supports_disjoint;
  }
};

struct VerifyOptions {
  double beta = 1.0;
  std::size_t lipschitz_pairs = 10000;
  std::uint64_t seed = 0x5eed;
};

/// Euclidean distance between the boxes C(a, 2N) and C(b, 2N).
inline double plateau_support_distance(LatticePoint a, LatticePoint b, std::int64_t N) {
  const double g1 = double(std::max<std::int64_t>(0, std::llabs(a.x1 - b.x1) - 4 * N));
  const double g2 = double(std::max<std::int64_t>(0, std::llabs(a.x2 - b.x2) - 4 * N));
  return std::hypot(g1, g2);
}

inline PartitionCertificate verify_partition(const FiniteState& phi, std::int64_t N,
                                             const std::vector<LatticePoint>& centers,
                                             const VerifyOptions& opt = {}) {
  if (phi.empty()) throw std::invalid_argument("verify_partition: zero state");
  if (centers.empty()) throw std::invalid_argument("verify_partition: no centres");
  PartitionCertificate cert;
  cert.N = N;
  cert.centers = centers;
  cert.f = partition_sum(N, centers);
  auto& c = cert.checks;
  const std::size_t p = centers.size();
  for (std::size_t j = 0; j < p; ++j) {
    double row = 0.0;
    for (std::size_t l = 0; l < p; ++l) {
      if (l == j) continue;
      c.min_center_distance = std::min(c.min_center_distance, dist2(centers[j], centers[l]));
      c.min_center_distance_sup = std::min(c.min_center_distance_sup, double(dist_sup(centers[j], centers[l])));
      const double rho = plateau_support_distance(centers[j], centers[l], N);
      c.min_support_distance = std::min(c.min_support_distance, rho);
      // plateau supports {f > 0} are the open boxes |x - a|_inf < 2N
      if (dist_sup(centers[j], centers[l]) < 4 * N - 1) c.plateau_supports_disjoint = false;
      row += std::exp(-opt.beta * rho);
    }
    c.exp_sum = std::max(c.exp_sum, row);
  }
  c.exp_ratio = c.exp_sum / (std::exp(-opt.beta * double(N)) / (opt.beta * opt.beta));

  // probes: pairs near the centres and near the support
  std::mt19937_64 gen(opt.seed);
  std::vector<LatticePoint> anchors = centers;
  for (const auto& [x, v] : phi.support()) anchors.push_back(x);
  std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 1);
  std::uniform_int_distribution<std::int64_t> jitter(-3 * N, 3 * N);
  for (std::size_t k = 0; k < opt.lipschitz_pairs; ++k) {
    const LatticePoint a = anchors[pick(gen)];
    const LatticePoint x{a.x1 + jitter(gen), a.x2 + jitter(gen)};
    const LatticePoint y{x.x1 + jitter(gen), x.x2 + jitter(gen)};
    const double fx = cert.f(x), fy = cert.f(y);
    if (fx < 0.0 || fx > 1.0 || fy < 0.0 || fy > 1.0) c.range_ok = false;
    if (x == y) continue;
    const double ratio = std::abs(fx - fy) * double(N) / dist2(x, y);
    c.lipschitz_max = std::max(c.lipschitz_max, ratio);
  }
  c.lipschitz_ok = c.lipschitz_max <= 1.0 + 1e-12;

  double num = 0.0;
  for (const auto& [x, v] : phi.support()) num += std::norm(cert.f(x) * v);
  c.mass_ratio = std::sqrt(num) / phi.norm();
  return cert;
}

inline PartitionCertificate partition_function(const FiniteState& phi, std::int64_t N,
                                               const VerifyOptions& opt = {}) {
  return verify_partition(phi, N, greedy_centers(phi, N), opt);
}

// ---------------------------------------------------------------------------
// Localization

struct CommutatorReport {
  Eigen::MatrixXcd matrix;  // (f(x) - f(y)) H(x, y)
  double norm = 0.0;
  /// norm / (C / (N_f beta^3)): the empirical constant of the commutator estimate.
  double ratio = 0.0;
};

inline CommutatorReport localization_commutator(const LatticeFunction& f, const TruncatedOperator& op,
                                                double C, double beta, double N_f) {
  const auto n = Eigen::Index(op.dimension());
  Eigen::VectorXd fv(n);
  for (Eigen::Index i = 0; i < n; ++i) fv(i) = f(op.point(std::size_t(i)));
  CommutatorReport r;
  r.matrix.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) r.matrix(i, j) = (fv(i) - fv(j)) * op.entries(i, j);
  // i [f, h] is Hermitian
  const auto e = hermitian_eigen(cplx(0.0, 1.0) * r.matrix, false).values;
  r.norm = n == 0 ? 0.0 : std::max(std::abs(e(0)), std::abs(e(n - 1)));
  r.ratio = r.norm / (C / (N_f * beta * beta * beta));
  return r;
}

struct ImsReport {
  double residual = 0.0;
  /// residual / ((||h|| + |E|) ||Phi||^2)
  double relative = 0.0;
};

/// |<f Phi, (h - E) f Phi> - Re <f Phi, f (h - E) Phi> + 1/2 <Phi, [f, [f, h]] Phi>|.
inline ImsReport ims_identity_check(const Eigen::VectorXcd& phi, const Eigen::VectorXd& f,
                                    const Eigen::MatrixXcd& h, double E) {
  const auto n = h.rows();
  if (phi.size() != n || f.size() != n) throw std::invalid_argument("ims_identity_check: size mismatch");
  const Eigen::VectorXcd fphi = f.cast<cplx>().cwiseProduct(phi);
  const Eigen::VectorXcd hfphi = h * fphi - E * fphi;
  const Eigen::VectorXcd hphi = h * phi - E * phi;
  const cplx lhs = fphi.dot(hfphi);  // Eigen's dot conjugates the left argument
  const cplx mid = fphi.dot(f.cast<cplx>().cwiseProduct(hphi));
  // [f, [f, h]](x, y) = (f(x) - f(y))^2 h(x, y)
  Eigen::MatrixXcd dd(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) dd(i, j) = (f(i) - f(j)) * (f(i) - f(j)) * h(i, j);
  const cplx dbl = phi.dot(dd * phi);
  ImsReport r;
  r.residual = std::abs(lhs.real() - mid.real() + 0.5 * dbl.real());
  double hn = 0.0;
  if (n > 0) {
    const auto e = hermitian_eigen(h, false).values;
    hn = std::max(std::abs(e(0)), std::abs(e(n - 1)));
  }
  const double scale = (hn + std::abs(E)) * phi.squaredNorm();
  r.relative = scale > 0.0 ? r.residual / scale : r.residual;
  return r;
}

inline ImsReport ims_identity_check(const FiniteState& phi, const LatticeFunction& f, const TruncatedOperator& op,
                                    double E) {
  const auto n = Eigen::Index(op.dimension());
  Eigen::VectorXd fv(n);
  for (Eigen::Index i = 0; i < n; ++i) fv(i) = f(op.point(std::size_t(i)));
  return ims_identity_check(phi.on_box(op.box), fv, op.entries, E);
}

}  // namespace gho
