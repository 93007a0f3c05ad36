#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gho/eigensolver.hpp"
#include "gho/model.hpp"
#include "gho/resolvent.hpp"
#include "gho/spectrum.hpp"
#include "gho/truncated_operator.hpp"

using namespace gho;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GHOModel harper_model(double B = 1.0) { return {builtin::harper(1.0), builtin::constant_field(B), "harper"}; }

KernelSpec zero_kernel() {
  return KernelSpec("zero", [](LatticePoint, LatticePoint) { return cplx{}; }, 1.0, 1.0, 2)
      .with_stencil({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
}

TruncatedOperator diagonal_op(std::vector<double> d) {
  TruncatedOperator op;
  op.entries = Eigen::MatrixXcd::Zero(Eigen::Index(d.size()), Eigen::Index(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) op.entries(Eigen::Index(i), Eigen::Index(i)) = d[i];
  return op;
}

double spectral_norm(const Eigen::MatrixXcd& m) {
  return Eigen::BDCSVD<Eigen::MatrixXcd>(m).singularValues()(0);
}

// for a real spectral parameter the resolvent is Hermitian
double hermitian_norm(const Eigen::MatrixXcd& m) {
  const auto v = hermitian_eigen(0.5 * (m + m.adjoint()), false).values;
  return std::max(std::abs(v(0)), std::abs(v(v.size() - 1)));
}

double max_eigenvalue(const TruncatedOperator& op) {
  const auto v = hermitian_eigen(op.entries, false).values;
  return v(v.size() - 1);
}

}  // namespace

TEST_CASE("resolvent kernel on small operators") {
  const GHOModel zero{zero_kernel(), builtin::zero_phase(), "zero"};
  const auto rk0 = resolvent_kernel(assemble(zero, 0.0, BoxRegion({0, 0}, 2)), -1.0);
  CHECK(rk0.d == 1.0);
  CHECK((rk0.G - Eigen::MatrixXcd::Identity(25, 25)).cwiseAbs().maxCoeff() == 0.0);

  const auto rk = resolvent_kernel(diagonal_op({1.0, 2.0}), 0.0);
  CHECK(rk.d == 1.0);
  CHECK(rk.G(0, 0) == cplx(1.0));
  CHECK(rk.G(1, 1) == cplx(0.5));
  CHECK(rk.G(0, 1) == cplx(0.0));

  try {
    resolvent_kernel(diagonal_op({1.0, 2.0}), 2.0);
    FAIL("expected rejection");
  } catch (const ResolventError& e) {
    CHECK(e.distance() == 0.0);
  }
}

TEST_CASE("resolvent kernel for Harper at z = 5") {
  const auto op = assemble(harper_model(), 0.0, BoxRegion({0, 0}, 25), {.max_dimension = 3000});
  const auto rk = resolvent_kernel(op, 5.0);
  CHECK(rk.residual <= 1e-10);
  CHECK(rk.d >= 1.0);
  CHECK(rk.d <= 1.01);
  CHECK((rk.G - rk.G.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(hermitian_norm(rk.G) <= 1.0 / rk.d + 1e-9);
  CHECK(rk.norm() <= 1.0);
}

TEST_CASE("tilted b estimate") {
  const auto h = builtin::harper(1.0);
  const BoxRegion box({0, 0}, 15);
  const auto a = tilted_b_estimate(h, 1e-6, {0, 0}, box);
  const auto b = tilted_b_estimate(h, 1e-5, {0, 0}, box);
  CHECK(a.b > 0.0);
  CHECK(std::abs(a.b - b.b) <= 0.01 * b.b);
  // the mu -> 0 limit is the commutator with |x - x0|, each hop changes |x - x0| by at most 1
  CHECK(a.b <= 4.0 + 1e-6);

  const auto c0 = tilted_b_estimate(h, 0.5, {0, 0}, box);
  const auto c1 = tilted_b_estimate(h, 0.5, {4, -3}, box);
  CHECK(std::abs(c0.b - c1.b) <= 0.05 * c0.b);
  CHECK(c0.b <= c0.row_sum_bound);
  CHECK_THAT(c0.row_sum_bound, WithinRel(4.0 * std::exp(0.5), 1e-12));

  CHECK(tilted_b_estimate(zero_kernel(), 0.3, {0, 0}, box).b == 0.0);
  CHECK_THROWS_AS(tilted_b_estimate(h, 0.6, {0, 0}, box), std::invalid_argument);
  CHECK_THROWS_AS(tilted_b_estimate(h, 0.0, {0, 0}, box), std::invalid_argument);
}

TEST_CASE("admissible mu") {
  CHECK(admissible_mu(1.0, 1.0, 1.0) == 0.5);
  CHECK(admissible_mu(0.2, 10.0, 1.0) == 0.1);
  CHECK_THAT(admissible_mu(1.0, 0.1, 5.0), WithinRel(0.01, 1e-15));
  CHECK_THROWS_AS(admissible_mu(1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("weighted resolvent equals the tilted resolvent") {
  const auto model = harper_model();
  const BoxRegion box({0, 0}, 10);
  const auto op = assemble(model, 0.4, box);
  const double top = max_eigenvalue(op);
  for (double d : {0.5, 1.0}) {
    const cplx z = top + d;
    const auto rk = resolvent_kernel(op, z);
    const double b = tilted_b_estimate(model.kernel, 0.5, {2, 1}, box).b;
    const double mu = admissible_mu(model.kernel.beta(), rk.d, b);
    const auto w = tilt_weights(box, mu, {2, 1});
    const Eigen::MatrixXcd lhs = w.cast<cplx>().asDiagonal() * rk.G * w.cwiseInverse().cast<cplx>().asDiagonal();
    Eigen::MatrixXcd A = tilted_operator(op.entries, box, mu, {2, 1});
    A.diagonal().array() -= z;
    const Eigen::MatrixXcd rhs = A.inverse();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8);

    // tilted resolvent bound along a rectangle with clearance d around the spectrum
    const auto ev = hermitian_eigen(op.entries, false).values;
    const auto contour = rectangle_contour(ev(0) - rk.d, top + rk.d, rk.d, 4);
    for (const auto& node : contour.nodes) {
      Eigen::MatrixXcd B = tilted_operator(op.entries, box, mu, {2, 1});
      B.diagonal().array() -= node;
      const double dz = spectral_distance(ev, node);
      CHECK(spectral_norm(B.inverse()) <= 2.0 / dz + 1e-6);
    }
  }
}

TEST_CASE("Combes-Thomas decay") {
  SECTION("diagonal operator") {
    TruncatedOperator op = diagonal_op({1, 2, 3, 4, 5, 6, 7, 8, 9});
    op.box = BoxRegion({0, 0}, 1);
    const auto r = decay_check(resolvent_kernel(op, 0.0), 1.0);
    CHECK(r.interior_points == 1);
    CHECK(r.max_ratio == 0.5 * (1.0 / 5.0) * 1.0);
    CHECK(r.pass);
  }
  SECTION("Harper at z = 5 and the doubled-rate probe") {
    const BoxRegion box({0, 0}, 25);
    const auto rk = resolvent_kernel(assemble(harper_model(), 0.0, box, {.max_dimension = 3000}), 5.0);
    const double b = tilted_b_estimate(builtin::harper(1.0), 0.5, {0, 0}, box).b;
    const double mu = admissible_mu(1.0, rk.d, b);
    const auto r = decay_check(rk, mu);
    CHECK(r.interior_points > 100);
    CHECK(r.pass);
    // beyond the admissible range the bound is not guaranteed; only the direction is checked
    const auto probe = decay_check(rk, 2.0 * mu);
    CHECK(probe.max_ratio >= r.max_ratio);
  }
  SECTION("every builtin model at three gap depths") {
    const std::vector<GHOModel> models{
        harper_model(),
        {builtin::random_translation_invariant(42, 2, 1.0, 0.7), builtin::constant_field(1.0), "random"},
        {builtin::modulated(builtin::harper(1.0), 0.3, 0.7, 1.3), builtin::constant_field(0.5), "modulated"},
        {builtin::harper(1.0), builtin::bump_field(0.5, 0.4, 3.0), "bump"},
    };
    const BoxRegion box({0, 0}, 18);
    for (const auto& m : models) {
      const auto op = assemble(m, 0.5, box);
      const double top = max_eigenvalue(op);
      const double b = tilted_b_estimate(m.kernel, m.kernel.beta() / 2.0, {0, 0}, box).b;
      for (double d : {0.5, 1.0, 2.0}) {
        const auto rk = resolvent_kernel(op, top + d);
        const double mu = admissible_mu(m.kernel.beta(), rk.d, b);
        const auto r = decay_check(rk, mu);
        INFO(m.label << " d " << d << " mu " << mu << " ratio " << r.max_ratio);
        CHECK(r.interior_points > 0);
        CHECK(r.pass);
      }
    }
  }
}

TEST_CASE("twisted parametrix") {
  const auto model = harper_model();
  SECTION("zero flux") {
    const BoxRegion box({0, 0}, 6);
    const auto p = twisted_parametrix(model, 0.0, 5.0, box);
    const auto rk = resolvent_kernel(assemble(model, 0.0, box), 5.0);
    CHECK((p.S - rk.G).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.T.cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.residual <= 1e-10);
  }
  SECTION("identity at eps = 0.1, N = 20") {
    const BoxRegion box({0, 0}, 20);
    const auto p = twisted_parametrix(model, 0.1, 5.0, box);
    CHECK(p.residual <= 1e-10);
    CHECK(p.column_sum > 0.0);
    const double b = tilted_b_estimate(model.kernel, 0.5, {0, 0}, box).b;
    const double mu = admissible_mu(1.0, p.d, b);
    const double M = p.column_sum * mu * mu * mu * p.d;
    CHECK_THAT(M, WithinRel(6.1584e-4, 1e-4));
  }
  SECTION("complex z and a smooth field") {
    const GHOModel bump{builtin::harper(1.0), builtin::bump_field(0.5, 0.4, 3.0), "bump"};
    const auto p = twisted_parametrix(bump, 0.7, cplx(0.3, 0.5), BoxRegion({1, -1}, 5));
    CHECK(p.residual <= 1e-10);
  }
}

TEST_CASE("Riesz gap operator") {
  SECTION("diagonal case") {
    const auto op = diagonal_op({0.0, 1.0, 5.0, 6.0});
    const auto gap = make_gap(1.0, 5.0);
    for (auto method : {RieszMethod::projection, RieszMethod::contour}) {
      const auto r = riesz_gap_operator(op, gap, -1.0, {.method = method});
      const Eigen::Vector4cd expect(0.0, 1.0, -2.0, -2.0);
      CHECK((r.h1 - Eigen::MatrixXcd(expect.asDiagonal())).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK_THAT(r.E1, WithinAbs(1.0, 1e-10));
      CHECK(r.below_sup == 1.0);
      CHECK(r.hermiticity <= 1e-10);
    }
    CHECK_THROWS_AS(riesz_gap_operator(op, gap, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(riesz_gap_operator(op, make_gap(1.0, 5.5), -1.0), GapClosedError);
    CHECK_THROWS_AS(riesz_gap_operator(op, make_gap(6.5, 7.0), -1.0), GapClosedError);
  }
  SECTION("Harper at flux 1/3, projection against contour") {
    const auto op = assemble(harper_model(), 2.0 * std::numbers::pi / 3.0, BoxRegion({0, 0}, 6));
    const auto ev = hermitian_eigen(op.entries, false).values;
    // the widest spacing between consecutive eigenvalues of the truncation
    Eigen::Index k = 0;
    for (Eigen::Index i = 1; i + 1 < ev.size(); ++i)
      if (ev(i + 1) - ev(i) > ev(k + 1) - ev(k)) k = i;
    const auto gap = make_gap(ev(k), ev(k + 1));
    const double lambda = ev(0) - 1.0;
    const auto p = riesz_gap_operator(op, gap, lambda, {.method = RieszMethod::projection});
    CHECK(p.hermiticity <= 1e-10);
    CHECK_THAT(p.E1, WithinAbs(ev(k), 1e-8));
    INFO("gap " << gap.a << " .. " << gap.b);
    // the horizontal sides run at distance d from the whole spectrum, so the error falls like
    // (1 + d / half-side)^(-2 nodes) and a narrow gap needs far more than 64 nodes per side
    double previous = std::numeric_limits<double>::infinity();
    for (int nodes : {64, 128, 256}) {
      const auto c = riesz_gap_operator(op, gap, lambda, {.method = RieszMethod::contour, .nodes_per_side = nodes});
      REQUIRE(c.contours.size() == 2);
      for (const auto& g : c.contours) {
        CHECK(g.nodes.size() == 4 * std::size_t(nodes));
        CHECK(g.clearance >= gap.d * (1.0 - 1e-12));
      }
      CHECK(c.hermiticity <= 1e-10);
      const double err = (p.h1 - c.h1).cwiseAbs().maxCoeff();
      CHECK(err < previous);
      previous = err;
      if (nodes == 64) CHECK(err <= 1e-2);
      if (nodes == 256) {
        CHECK(err <= 1e-6);
        CHECK_THAT(c.E1, WithinAbs(ev(k), 1e-8));
      }
    }
  }
  SECTION("a wide gap converges at the default node count") {
    const auto op = assemble(harper_model(), 2.0 * std::numbers::pi / 3.0, BoxRegion({0, 0}, 1));
    const auto ev = hermitian_eigen(op.entries, false).values;
    Eigen::Index k = 0;
    for (Eigen::Index i = 1; i + 1 < ev.size(); ++i)
      if (ev(i + 1) - ev(i) > ev(k + 1) - ev(k)) k = i;
    const auto gap = make_gap(ev(k), ev(k + 1));
    const auto p = riesz_gap_operator(op, gap, ev(0) - 1.0);
    const auto c = riesz_gap_operator(op, gap, ev(0) - 1.0, {.method = RieszMethod::contour, .jobs = 2});
    INFO("gap " << gap.a << " .. " << gap.b);
    CHECK((p.h1 - c.h1).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK_THAT(c.E1, WithinAbs(ev(k), 1e-8));
  }
}

TEST_CASE("rectangle contour integrates polynomials and simple poles") {
  const auto c = rectangle_contour(-1.0, 2.0, 0.5, 64);
  CHECK(c.nodes.size() == 256);
  cplx poly{}, pole{}, outside{};
  for (std::size_t k = 0; k < c.nodes.size(); ++k) {
    poly += c.weights[k] * c.nodes[k] * c.nodes[k];
    pole += c.weights[k] / (c.nodes[k] - 0.5);
    outside += c.weights[k] / (c.nodes[k] - 4.0);
  }
  CHECK(std::abs(poly) <= 1e-13);
  CHECK(std::abs(pole - cplx(0.0, 2.0 * std::numbers::pi)) <= 1e-10);
  CHECK(std::abs(outside) <= 1e-10);
  CHECK_THROWS_AS(rectangle_contour(1.0, 1.0, 0.5, 8), std::invalid_argument);
}
