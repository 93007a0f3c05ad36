#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <vector>

namespace gho {

/// A site of the square lattice Z^2.
struct LatticePoint {
  std::int64_t x1 = 0;
  std::int64_t x2 = 0;

  constexpr LatticePoint operator+(LatticePoint o) const { return {x1 + o.x1, x2 + o.x2}; }
  constexpr LatticePoint operator-(LatticePoint o) const { return {x1 - o.x1, x2 - o.x2}; }
  constexpr LatticePoint operator-() const { return {-x1, -x2}; }
  constexpr auto operator<=>(const LatticePoint&) const = default;
};

inline double norm2(LatticePoint p) {
  return std::hypot(static_cast<double>(p.x1), static_cast<double>(p.x2));
}

inline std::int64_t norm_sup(LatticePoint p) {
  return std::max(std::llabs(p.x1), std::llabs(p.x2));
}

inline double dist2(LatticePoint a, LatticePoint b) { return norm2(a - b); }
inline std::int64_t dist_sup(LatticePoint a, LatticePoint b) { return norm_sup(a - b); }

/// Twice the signed area of the triangle (x, y, z); exact integer arithmetic.
inline std::int64_t twice_signed_area(LatticePoint x, LatticePoint y, LatticePoint z) {
  const LatticePoint u = y - x;
  const LatticePoint v = z - x;
  return u.x1 * v.x2 - u.x2 * v.x1;
}

/// Area of the triangle spanned by three lattice points (shoelace formula).
inline double triangle_area(LatticePoint x, LatticePoint y, LatticePoint z) {
  return static_cast<double>(std::llabs(twice_signed_area(x, y, z))) / 2.0;
}

/// The sup-norm box C(a, N) = { x : |x_mu - a_mu| <= N }.
struct BoxRegion {
  LatticePoint center;
  std::int64_t radius = 0;

  BoxRegion() = default;
  BoxRegion(LatticePoint c, std::int64_t n) : center(c), radius(n) {
    if (n < 0) throw std::invalid_argument("BoxRegion: radius must be nonnegative");
  }

  std::int64_t side() const { return 2 * radius + 1; }
  std::size_t size() const { return static_cast<std::size_t>(side() * side()); }

  bool contains(LatticePoint x) const { return dist_sup(x, center) <= radius; }

  /// Row index of x in lexicographic (x1, x2) order. Requires contains(x).
  std::size_t index_of(LatticePoint x) const {
    const auto i = x.x1 - center.x1 + radius;
    const auto j = x.x2 - center.x2 + radius;
    return static_cast<std::size_t>(i * side() + j);
  }

  LatticePoint point_at(std::size_t idx) const {
    const auto s = static_cast<std::size_t>(side());
    return {center.x1 - radius + static_cast<std::int64_t>(idx / s),
            center.x2 - radius + static_cast<std::int64_t>(idx % s)};
  }

  /// Distance (in lattice layers) from x to the outside of the box; 0 on the outer layer.
  std::int64_t depth(LatticePoint x) const { return radius - dist_sup(x, center); }
};

/// All points of C(a, N) in lexicographic order.
inline std::vector<LatticePoint> box_points(LatticePoint a, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("box_points: N must be nonnegative");
  std::vector<LatticePoint> pts;
  pts.reserve(static_cast<std::size_t>((2 * n + 1) * (2 * n + 1)));
  for (std::int64_t i = -n; i <= n; ++i)
    for (std::int64_t j = -n; j <= n; ++j) pts.push_back({a.x1 + i, a.x2 + j});
  return pts;
}

inline std::vector<LatticePoint> box_points(const BoxRegion& box) {
  return box_points(box.center, box.radius);
}

}  // namespace gho

template <>
struct std::hash<gho::LatticePoint> {
  std::size_t operator()(const gho::LatticePoint& p) const noexcept {
    const auto h1 = std::hash<std::int64_t>{}(p.x1);
    const auto h2 = std::hash<std::int64_t>{}(p.x2);
    return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
  }
};
