#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gho/eigensolver.hpp"
#include "gho/model.hpp"

// Rational-flux band structure for translation-invariant kernels in the
// constant field phi(x, y) = (B/2)(x2 y1 - x1 y2).
//
// Convention: the flux per unit cell is alpha = epsilon B / (2 pi) = p/q.
// The symmetric gauge is conjugated by diag(exp(i gamma x1 x2 / 2)), gamma = 2 pi p/q,
// into the Landau gauge exp(i gamma (x1 + y1)(x2 - y2) / 2) t(x - y), which is
// q-periodic in x1 and 1-periodic in x2. Quasi-momenta sweep the magnetic zone
// [0, 2 pi/q) x [0, 2 pi); the reduced zone [0, 2 pi/q)^2 gives the same spectrum.

namespace gho {

enum class BlochZone { magnetic, reduced };

struct BandStructure {
  std::int64_t p = 0;
  std::int64_t q = 1;
  double field = 1.0;  // B
  double epsilon = 0.0;
  int m = 0;
  BlochZone zone = BlochZone::magnetic;
  /// bands[j] holds the j-th lowest eigenvalue at every k-point.
  std::vector<std::vector<double>> bands;

  /// [min, max] over the k-grid of every band.
  std::vector<std::pair<double, double>> band_ranges() const {
    std::vector<std::pair<double, double>> r;
    r.reserve(bands.size());
    for (const auto& b : bands) {
      const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
      r.push_back({*lo, *hi});
    }
    return r;
  }

  /// All band samples, ascending.
  std::vector<double> values() const {
    std::vector<double> v;
    for (const auto& b : bands) v.insert(v.end(), b.begin(), b.end());
    std::sort(v.begin(), v.end());
    return v;
  }
};

/// q x q Bloch matrix at quasi-momentum k. Hops that wrap around the magnetic cell
/// carry exp(i k1 q w); this periodic gauge keeps H(k) real whenever exp(i k1 q) is.
inline Eigen::MatrixXcd bloch_matrix(const std::vector<Hop>& hops, std::int64_t p, std::int64_t q,
                                     double k1, double k2) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(q, q);
  for (const auto& hop : hops) {
    const auto c1 = hop.offset.x1, c2 = hop.offset.x2;
    for (std::int64_t j = 0; j < q; ++j) {
      const std::int64_t shifted = j - c1;
      std::int64_t w = shifted / q;
      if (shifted % q != 0 && shifted < 0) --w;  // floor division
      const std::int64_t jp = shifted - w * q;
      // gamma (2j - c1) c2 / 2 reduced mod 2 pi exactly: p (2j - c1) c2 / q turns.
      const std::int64_t turns_num = ((p * ((2 * j - c1) * c2 % (2 * q))) % (2 * q) + 2 * q) % (2 * q);
      const double landau = std::numbers::pi * double(turns_num) / double(q);
      const double phase = landau - k2 * double(c2) + k1 * double(q) * double(w);
      h(j, jp) += hop.amplitude * std::polar(1.0, phase);
    }
  }
  // Imaginary parts at rounding level come from cancelling conjugate hops; clearing them
  // lets real Bloch matrices take the real symmetric solver.
  const double floor = 1e-15 * std::max(1.0, h.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      if (std::abs(h(i, j).imag()) <= floor) h(i, j).imag(0.0);
  return h;
}

inline BandStructure bloch_bands(const KernelSpec& kernel, std::int64_t p, std::int64_t q, int m,
                                 double B = 1.0, BlochZone zone = BlochZone::magnetic) {
  if (q < 1) throw std::invalid_argument("bloch_bands: q must be positive");
  if (std::gcd(p, q) != 1) throw std::invalid_argument("bloch_bands: p and q must be coprime");
  if (m < 1) throw std::invalid_argument("bloch_bands: k-grid size must be positive");
  if (!(B > 0.0)) throw std::invalid_argument("bloch_bands: field B must be positive");
  if (!kernel.translation_invariant())
    throw std::invalid_argument("bloch_bands: kernel '" + kernel.name() +
                                "' is not translation invariant");
  const auto& hops = *kernel.translation_table();
  BandStructure bs;
  bs.p = p;
  bs.q = q;
  bs.field = B;
  bs.epsilon = 2.0 * std::numbers::pi * double(p) / (double(q) * B);
  bs.m = m;
  bs.zone = zone;
  bs.bands.assign(std::size_t(q), std::vector<double>(std::size_t(m) * std::size_t(m)));
  const double step1 = 2.0 * std::numbers::pi / (double(q) * m);
  const double step2 = zone == BlochZone::magnetic ? 2.0 * std::numbers::pi / m : step1;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      auto e = hermitian_eigen(bloch_matrix(hops, p, q, a * step1, b * step2), false);
      for (std::int64_t j = 0; j < q; ++j)
        bs.bands[std::size_t(j)][std::size_t(a) * std::size_t(m) + std::size_t(b)] = e.values(j);
    }
  return bs;
}

}  // namespace gho
