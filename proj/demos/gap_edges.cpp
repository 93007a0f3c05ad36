// Gaps of the Harper operator at flux 1/3 and how their edges move when the flux is perturbed.

#include <cstdio>
#include <numbers>

#include "gho/gho.hpp"

using namespace gho;

int main() {
  const auto model = io::harper_model();
  const double eps0 = 2.0 * std::numbers::pi / 3.0;
  const auto oracle = make_oracle(model, BlochMethod{2, BlochZone::reduced, 5000});

  const auto gaps = detect_gaps(oracle(eps0), 0.05);
  std::printf("%zu gaps at eps0 = 2pi/3\n", gaps.size());
  for (const auto& g : gaps) std::printf("  (%.6f, %.6f)  width %.6f\n", g.a, g.b, g.width());

  const auto gap = *largest_gap(gaps);
  std::vector<double> deltas;
  for (int k = 5; k <= 10; ++k) deltas.push_back(std::ldexp(1.0, -k));
  const auto offs = plan_offsets(eps0, deltas, uniform_field_of(model), false);
  const auto track = gap_edge_track(oracle, gap, offs);

  std::printf("\n%12s %12s %12s\n", "delta", "lower edge", "upper edge");
  for (const auto& row : track.rows) std::printf("%12.6g %12.8f %12.8f\n", row.delta, row.e1_plus, row.e2_plus);
  std::printf("\nfitted exponents: lower %.3f, upper %.3f\n", holder_fit(edge_series(track, 1, eps0)).exponent,
              holder_fit(edge_series(track, 2, eps0)).exponent);
}
