#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gho/continuity.hpp"

using namespace gho;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

SpectrumSample points(std::vector<double> v) {
  SpectrumSample s;
  std::sort(v.begin(), v.end());
  s.values = std::move(v);
  return s;
}

ScalingSeries power_series(double K, double a, int k0 = 4, int k1 = 10) {
  ScalingSeries s;
  for (int k = k0; k <= k1; ++k) {
    const double d = std::ldexp(1.0, -k);
    s.deltas.push_back(d);
    s.observations.push_back(K * std::pow(d, a));
  }
  return s;
}

// Hausdorff distance between finite unions of intervals by brute-force discretization.
double brute_hausdorff(const std::vector<Interval>& A, const std::vector<Interval>& B, double h) {
  auto sample = [h](const std::vector<Interval>& S) {
    std::vector<double> v;
    for (auto [a, b] : S) {
      const int n = int(std::ceil((b - a) / h));
      for (int i = 0; i <= n; ++i) v.push_back(n == 0 ? a : a + (b - a) * i / n);
    }
    return v;
  };
  const auto a = sample(A), b = sample(B);
  auto directed = [](const std::vector<double>& X, const std::vector<double>& Y) {
    double worst = 0.0;
    for (double x : X) {
      double best = std::numeric_limits<double>::infinity();
      for (double y : Y) best = std::min(best, std::abs(x - y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

TruncationMethod truncation(std::int64_t N) {
  TruncationMethod m;
  m.N = N;
  return m;
}

}  // namespace

TEST_CASE("Hausdorff distance on point sets") {
  const std::vector<double> a{-1.0, 0.5, 2.0};
  CHECK(hausdorff_distance(a, a) == 0.0);
  CHECK(hausdorff_distance(std::vector<double>{0.0}, std::vector<double>{1.0}) == 1.0);
  CHECK(hausdorff_distance(std::vector<double>{-1.0, 0.0, 1.0}, std::vector<double>{0.0}) == 1.0);
  CHECK(hausdorff_distance(points({-1.0, 0.0, 1.0}), points({0.0})) == 1.0);
  CHECK_THROWS_AS(hausdorff_distance(std::vector<double>{}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("Hausdorff distance is a metric on random point sets") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  std::uniform_int_distribution<int> len(1, 40);
  auto random_set = [&] {
    std::vector<double> v(std::size_t(len(gen)));
    for (auto& x : v) x = val(gen);
    std::sort(v.begin(), v.end());
    return v;
  };
  for (int t = 0; t < 100; ++t) {
    const auto A = random_set(), B = random_set(), C = random_set();
    const double ab = hausdorff_distance(A, B), ba = hausdorff_distance(B, A);
    CHECK(ab == ba);
    CHECK(ab <= hausdorff_distance(A, C) + hausdorff_distance(C, B) + 1e-12);
  }
}

TEST_CASE("Hausdorff distance between interval unions") {
  const std::vector<Interval> full{{0.0, 1.0}};
  const std::vector<Interval> split{{0.0, 0.2}, {0.9, 1.0}};
  CHECK_THAT(hausdorff_distance(full, split), WithinAbs(0.35, 1e-15));
  CHECK_THAT(hausdorff_distance(full, split), WithinAbs(brute_hausdorff(full, split, 1e-3), 1e-3));

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> val(-3.0, 3.0), wid(0.0, 0.8);
  for (int t = 0; t < 20; ++t) {
    std::vector<Interval> A, B;
    for (int i = 0; i < 4; ++i) {
      const double a = val(gen), b = val(gen);
      A.push_back({a, a + wid(gen)});
      B.push_back({b, b + wid(gen)});
    }
    A = merge_intervals(A);
    B = merge_intervals(B);
    CHECK_THAT(hausdorff_distance(A, B), WithinAbs(brute_hausdorff(A, B, 2e-3), 2e-3));
  }

  // band data is used when present, raw points otherwise
  SpectrumSample banded = points({0.0, 1.0});
  banded.bands = {{0.0, 1.0}};
  CHECK_THAT(set_hausdorff_distance(banded, points({0.0, 1.0})), WithinAbs(0.5, 1e-15));
  CHECK(hausdorff_distance(banded, points({0.0, 1.0})) == 0.0);
  CHECK_THAT(set_hausdorff_distance(banded, points({1.0})), WithinAbs(1.0, 1e-15));
}

TEST_CASE("spectral_sweep") {
  const GHOModel harper{builtin::harper(1.0), builtin::constant_field(1.0), "harper"};
  const auto tm = truncation(4);
  const auto one = spectral_sweep(harper, {0.3}, tm);
  REQUIRE(one.size() == 1);
  CHECK(one[0].epsilon == 0.3);

  const auto twice = spectral_sweep(harper, {0.0, 0.0}, tm);
  CHECK(twice[0].values == twice[1].values);

  std::vector<double> eps;
  for (int k = 0; k < 5; ++k) eps.push_back(2.0 * pi * k / 5.0);
  const auto serial = spectral_sweep(harper, eps, BlochMethod{.m = 16}, 1);
  const auto threaded = spectral_sweep(harper, eps, BlochMethod{.m = 16}, 4);
  REQUIRE(serial.size() == 5);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    CHECK(serial[i].values == threaded[i].values);
    CHECK(serial[i].meta.q == (i == 0 ? 1 : 5));
  }

  SpectrumOracle failing = [](double e) -> SpectrumSample {
    if (e > 0.5) throw std::runtime_error("boom");
    return points({e});
  };
  try {
    spectral_sweep(failing, {0.1, 0.7, 0.9}, 2);
    FAIL("expected SweepError");
  } catch (const SweepError& e) {
    CHECK(e.epsilon() == 0.7);
  }
  CHECK_THROWS_AS(spectral_sweep(failing, {}, 1), std::invalid_argument);

  const GHOModel bump{builtin::harper(1.0), builtin::bump_field(0.5, 0.2, 3.0), "bump"};
  CHECK_THROWS_AS(make_oracle(bump, BlochMethod{}), std::invalid_argument);
}

TEST_CASE("holder_fit recovers exact power laws") {
  const auto f = holder_fit(power_series(3.0, 0.5));
  CHECK_THAT(f.exponent, WithinAbs(0.5, 1e-9));
  CHECK_THAT(f.constant, WithinRel(3.0, 1e-9));
  CHECK(f.residual <= 1e-12);
  CHECK(f.points_used == 7);

  const auto g = holder_fit(power_series(2.0, 1.0));
  CHECK_THAT(g.exponent, WithinAbs(1.0, 1e-9));
  CHECK_THAT(g.constant, WithinRel(2.0, 1e-9));

  auto noisy = power_series(1.0, 1.0);
  noisy.observations[6] = 1e-12;
  noisy.observations[5] = 0.0;
  const auto h = holder_fit(noisy);
  CHECK(h.points_used == 5);
  CHECK(h.points_excluded == 2);
  CHECK_THAT(h.exponent, WithinAbs(1.0, 1e-9));

  auto starved = power_series(1.0, 1.0, 4, 5);
  starved.observations[1] = 0.0;
  CHECK_THROWS_AS(holder_fit(starved), std::invalid_argument);

  auto unsorted = power_series(1.0, 1.0);
  std::swap(unsorted.deltas[0], unsorted.deltas[1]);
  CHECK_THROWS_AS(holder_fit(unsorted), std::invalid_argument);
  auto negative = power_series(1.0, 1.0);
  negative.observations[0] = -1.0;
  CHECK_THROWS_AS(holder_fit(negative), std::invalid_argument);
}

TEST_CASE("midpoint_defect") {
  auto affine = [](double e) { return 2.0 - 3.0 * e; };
  CHECK_THAT(midpoint_defect(affine, 0.7, 0.25), WithinAbs(0.0, 1e-15));
  auto parabola = [](double e) { return -e * e; };
  for (double h : {0.5, 0.1, 1.0 / 64.0}) CHECK_THAT(midpoint_defect(parabola, 0.0, h), WithinAbs(h * h, 1e-15));
  CHECK_THROWS_AS(midpoint_defect(parabola, 0.0, 0.6), std::invalid_argument);
}

TEST_CASE("modulus_check") {
  ScalingSeries s;
  for (int k = 2; k <= 8; ++k) {
    const double d = std::ldexp(1.0, -k);
    s.deltas.push_back(d);
    s.observations.push_back(0.5 * d * std::abs(std::log(d)));
  }
  CHECK_THAT(modulus_check(s, Shape::delta_log()).K_min, WithinAbs(0.5, 1e-12));
  CHECK(modulus_check(s, Shape::delta_log()).pass);

  const auto r = power_series(1.0, 0.5);
  CHECK_THAT(modulus_check(r, Shape::square_root()).K_min, WithinAbs(1.0, 1e-12));
  CHECK_THAT(modulus_check(power_series(1.0, 0.75), Shape::pow(0.75)).K_min, WithinAbs(1.0, 1e-12));

  ScalingSeries wide;
  wide.deltas = {0.75};
  wide.observations = {0.1};
  CHECK_THROWS_AS(modulus_check(wide, Shape::square_root()), std::invalid_argument);
}

TEST_CASE("rational offset planning") {
  const double eps0 = 2.0 * pi * 0.3;
  std::vector<double> deltas;
  for (int k = 4; k <= 10; ++k) deltas.push_back(std::ldexp(1.0, -k));
  const auto offs = plan_offsets(eps0, deltas, 1.0, true);
  REQUIRE(offs.size() == deltas.size());
  for (const auto& o : offs) {
    CHECK(std::abs(o.effective - o.nominal) <= 0.02 * o.nominal);
    CHECK(o.alpha_plus.den <= 4096);
    REQUIRE(o.alpha_minus);
    CHECK(o.alpha_minus->den <= 4096);
    CHECK_THAT(o.eps_plus - eps0, WithinRel(o.effective, 1e-9));
    CHECK_THAT(eps0 - *o.eps_minus, WithinRel(o.effective, 1e-9));
    CHECK_THAT(o.eps_plus / (2.0 * pi), WithinAbs(o.alpha_plus.value(), 1e-15));
  }
  for (std::size_t i = 1; i < offs.size(); ++i) CHECK(offs[i].effective < offs[i - 1].effective);

  const auto plain = plain_offsets(1.0, {0.25, 0.125}, false);
  CHECK(plain[0].eps_plus == 1.25);
  CHECK_FALSE(plain[0].eps_minus);
  CHECK_THROWS_AS(plain_offsets(1.0, {0.0}, false), std::invalid_argument);
}

TEST_CASE("Hausdorff scaling of truncated spectra is at least square-root") {
  // finite truncations move by at most ||h_eps - h_eta||, so the fitted exponent sits near 1
  std::vector<GHOModel> models{
      {builtin::harper(1.0), builtin::constant_field(1.0), "harper"},
      {builtin::random_translation_invariant(3, 2, 1.0, 0.9), builtin::constant_field(1.0), "random"},
      {builtin::modulated(builtin::harper(1.0), 0.3, 0.4, 1.1), builtin::constant_field(1.0), "modulated"},
      {builtin::harper(1.0), builtin::bump_field(0.5, 0.3, 3.0), "bump"},
  };
  std::vector<double> deltas;
  for (int k = 4; k <= 10; ++k) deltas.push_back(std::ldexp(1.0, -k));
  for (const auto& model : models)
    for (double eps0 : {0.0, 2.0 * pi / 3.0, 2.0 * pi * 0.3}) {
      const auto oracle = make_oracle(model, truncation(6));
      const auto s = hausdorff_series(oracle, eps0, plain_offsets(eps0, deltas, false), 2, model.label);
      const auto fit = holder_fit(s);
      INFO(model.label << " eps0=" << eps0);
      CHECK(fit.exponent >= 0.45);
    }
}

TEST_CASE("E+ series from synthetic oracles") {
  // sup sigma(eps) = 1 - (eps - 1)^2: the defect is exactly delta^2
  SpectrumOracle oracle = [](double e) { return points({-1.0, 1.0 - (e - 1.0) * (e - 1.0)}); };
  const auto offs = plain_offsets(1.0, {0.25, 0.125, 0.0625}, true);
  const auto samples = sample_eplus(oracle, 1.0, offs);
  CHECK(samples.center == 1.0);
  const auto mid = midpoint_series(samples, 1.0, offs);
  for (std::size_t i = 0; i < offs.size(); ++i) CHECK_THAT(mid.observations[i], WithinAbs(std::pow(offs[i].effective, 2), 1e-15));
  CHECK_THAT(holder_fit(mid).exponent, WithinAbs(2.0, 1e-9));
  const auto up = eplus_series(samples, 1.0, offs);
  CHECK_THAT(holder_fit(up).exponent, WithinAbs(2.0, 1e-9));

  // convex top: negative defects are kept signed and clipped to 0
  SpectrumOracle convex = [](double e) { return points({e * e}); };
  const auto c = midpoint_series(sample_eplus(convex, 0.0, plain_offsets(0.0, {0.5, 0.25}, true)), 0.0,
                                 plain_offsets(0.0, {0.5, 0.25}, true));
  CHECK(c.observations[0] == 0.0);
  CHECK_THAT(c.signed_observations[0], WithinAbs(-0.25, 1e-15));

  const auto one_sided = plain_offsets(1.0, {0.25}, false);
  CHECK_THROWS_AS(midpoint_series(sample_eplus(oracle, 1.0, one_sided), 1.0, one_sided), std::invalid_argument);
}

TEST_CASE("gap edge tracking") {
  SECTION("delta = 0 reproduces the detected gap and a flat spectrum gives a flat track") {
    const GHOModel flat{builtin::harper(1.0), builtin::zero_phase(), "flat"};
    const auto oracle = make_oracle(flat, truncation(3));
    const auto gaps = detect_gaps(oracle(0.0), 0.3);
    REQUIRE_FALSE(gaps.empty());
    const auto gap = *largest_gap(gaps);
    const auto t = gap_edge_track(oracle, gap, plain_offsets(0.0, {0.5, 0.25, 0.125}, true));
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows[0].delta == 0.0);
    CHECK(t.rows[0].e1_plus == gap.a);
    CHECK(t.rows[0].e2_plus == gap.b);
    for (const auto& r : t.rows) {
      CHECK(r.e1_plus == gap.a);
      CHECK(r.e2_plus == gap.b);
      CHECK(*r.e1_minus == gap.a);
      CHECK(*r.e2_minus == gap.b);
    }
    const auto s = edge_series(t, 1, 0.0);
    CHECK(s.deltas.front() == 0.5);
    CHECK(s.observations == std::vector<double>(3, 0.0));
  }
  SECTION("a closing gap raises GapClosed at the first offending delta") {
    SpectrumOracle closing = [](double e) { return points({-1.0 + 5.0 * e, 1.0 - 5.0 * e}); };
    const auto gaps = detect_gaps(closing(0.0), 0.1);
    REQUIRE(gaps.size() == 1);
    const Gap g = gaps[0];  // (-1, 1), d = 0.5
    try {
      gap_edge_track(closing, g, plain_offsets(0.0, {0.3, 0.1}, false));
      FAIL("expected GapClosed");
    } catch (const GapClosed& e) {
      CHECK(e.delta() == 0.1);
    }
  }
  SECTION("moving edges are followed by nearest midpoint") {
    SpectrumOracle moving = [](double e) { return points({-2.0, -1.0 + e, 1.0 + 2.0 * e, 2.0 + 2.0 * e}); };
    const auto gap = make_gap(-1.0, 1.0);
    const auto t = gap_edge_track(moving, gap, plain_offsets(0.0, {0.2, 0.1}, true));
    CHECK_THAT(t.rows[1].e1_plus, WithinAbs(-0.9, 1e-15));
    CHECK_THAT(t.rows[1].e2_plus, WithinAbs(1.2, 1e-15));
    CHECK_THAT(*t.rows[2].e1_minus, WithinAbs(-1.2, 1e-15));
    const auto e2 = edge_series(t, 2, 0.0);
    CHECK_THAT(holder_fit(e2).exponent, WithinAbs(1.0, 1e-9));
  }
}
