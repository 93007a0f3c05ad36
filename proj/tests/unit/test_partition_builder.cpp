#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gho/bounds.hpp"
#include "gho/model.hpp"
#include "gho/partition.hpp"
#include "gho/truncated_operator.hpp"

using namespace gho;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FiniteState random_state(std::mt19937_64& gen, std::int64_t radius, int points) {
  std::uniform_int_distribution<std::int64_t> coord(-radius, radius);
  std::normal_distribution<double> amp;
  FiniteState phi;
  for (int k = 0; k < points; ++k) phi.set({coord(gen), coord(gen)}, cplx(amp(gen), amp(gen)));
  return phi;
}

Eigen::MatrixXcd random_hermitian(std::mt19937_64& gen, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(g(gen), g(gen));
  return (a + a.adjoint()) / 2.0;
}

Eigen::VectorXcd random_vector(std::mt19937_64& gen, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(gen), g(gen));
  return v;
}

}  // namespace

TEST_CASE("plateau function profile") {
  const LatticePoint a{2, -1};
  const auto f = plateau_function(4, a);
  CHECK(f(a) == 1.0);
  CHECK(f({6, 3}) == 1.0);
  CHECK(f({8, -1}) == 0.5);
  CHECK(f({10, -1}) == 0.0);
  CHECK(f({2, 20}) == 0.0);
  CHECK(f({9, 0}) == 0.25);
  CHECK_THROWS_AS(plateau_function(0, a), std::invalid_argument);

  for (std::int64_t i = -12; i <= 12; ++i)
    for (std::int64_t j = -12; j <= 12; ++j) {
      const LatticePoint x{a.x1 + i, a.x2 + j}, y{a.x1 + i + 1, a.x2 + j};
      CHECK(std::abs(f(x) - f(y)) <= 0.25);
    }
}

TEST_CASE("greedy centres on small examples") {
  SECTION("single mass") {
    FiniteState phi;
    phi.set({0, 0}, 1.0);
    const auto c = greedy_centers(phi, 3);
    REQUIRE(c.size() == 1);
    CHECK(dist_sup(c[0], {0, 0}) <= 3);
    CHECK(c[0] == LatticePoint{-3, -3});
  }
  SECTION("two distant masses") {
    FiniteState phi;
    phi.set({0, 0}, 1.0);
    phi.set({100, 0}, 1.0);
    const auto c = greedy_centers(phi, 3);
    REQUIRE(c.size() == 2);
    CHECK(c[0] == LatticePoint{-3, -3});
    CHECK(c[1] == LatticePoint{97, -3});
    const auto cert = verify_partition(phi, 3, c);
    CHECK(cert.checks.min_center_distance == 100.0);
    CHECK(cert.checks.min_center_distance_sup == 100.0);
    CHECK(cert.checks.min_support_distance == 88.0);
    CHECK(cert.distance_ok());
    CHECK(cert.rho_ok());
    CHECK(cert.checks.mass_ratio == 1.0);
    CHECK(cert.pass());
  }
  SECTION("heavier cluster is chosen first") {
    FiniteState phi;
    phi.set({0, 0}, 1.0);
    phi.set({50, 50}, 2.0);
    phi.set({51, 50}, 2.0);
    const auto c = greedy_centers(phi, 2);
    REQUIRE(c.size() == 2);
    CHECK(dist_sup(c[0], {50, 50}) <= 2);
    CHECK(dist_sup(c[0], {51, 50}) <= 2);
    CHECK(c[0] == LatticePoint{49, 48});
  }
  SECTION("a cluster inside 9N is absorbed") {
    FiniteState phi;
    phi.set({0, 0}, 1.0);
    phi.set({20, 0}, 0.5);
    CHECK(greedy_centers(phi, 3).size() == 1);
  }
  CHECK_THROWS_AS(greedy_centers(FiniteState{}, 3), std::invalid_argument);
}

TEST_CASE("verify_partition on supplied centres") {
  FiniteState phi;
  phi.set({0, 0}, 1.0);
  phi.set({12, 0}, 1.0);

  const auto bad = verify_partition(phi, 3, {{0, 0}, {12, 0}});
  CHECK(bad.checks.min_center_distance == 12.0);
  CHECK_FALSE(bad.distance_ok());
  CHECK_FALSE(bad.rho_ok());
  CHECK_FALSE(bad.pass());

  const auto single = verify_partition(phi, 3, {{0, 0}});
  CHECK(single.checks.exp_sum == 0.0);
  CHECK(single.distance_ok());
  CHECK(single.rho_ok());
  const auto plateau = plateau_function(3, {0, 0});
  for (std::int64_t i = -8; i <= 8; ++i)
    for (std::int64_t j = -8; j <= 8; ++j) CHECK(single.f({i, j}) == plateau({i, j}));
}

TEST_CASE("partition invariants on random states") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<std::int64_t> pickN(2, 10);
  std::uniform_int_distribution<int> pickSize(1, 60);
  for (int trial = 0; trial < 100; ++trial) {
    const auto phi = random_state(gen, 200, pickSize(gen));
    const std::int64_t N = pickN(gen);
    const auto cert = partition_function(phi, N, {.lipschitz_pairs = 2000});
    INFO("trial " << trial << " N " << N);
    CHECK(cert.centers.size() <= phi.size());
    CHECK(cert.distance_ok());
    CHECK(cert.checks.min_center_distance_sup >= 8.0 * double(N));
    CHECK(cert.rho_ok());
    CHECK(cert.mass_ok());
    CHECK(cert.checks.lipschitz_ok);
    CHECK(cert.checks.range_ok);
    CHECK(cert.checks.plateau_supports_disjoint);
    // every support point lies within 9N of some centre
    for (const auto& [x, v] : phi.support()) {
      bool covered = false;
      for (const auto& a : cert.centers) covered = covered || dist_sup(x, a) <= 9 * N;
      CHECK(covered);
    }
  }
}

TEST_CASE("partition sum stays in [0, 1] on a dense probe grid") {
  std::mt19937_64 gen(5);
  const auto phi = random_state(gen, 40, 30);
  const auto cert = partition_function(phi, 2);
  for (std::int64_t i = -50; i <= 50; ++i)
    for (std::int64_t j = -50; j <= 50; ++j) {
      const double v = cert.f({i, j});
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
}

TEST_CASE("localization commutator") {
  const GHOModel model{builtin::harper(1.0), builtin::constant_field(1.0), "harper"};
  const auto op = assemble(model, 0.3, BoxRegion({0, 0}, 20));

  const auto flat = localization_commutator([](LatticePoint) { return 0.7; }, op, std::numbers::e, 1.0, 5.0);
  CHECK(flat.matrix.cwiseAbs().maxCoeff() == 0.0);
  CHECK(flat.norm == 0.0);

  const auto f = plateau_function(5, {0, 0});
  const auto r = localization_commutator(f, op, std::numbers::e, 1.0, 5.0);
  for (Eigen::Index i = 0; i < op.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < op.entries.cols(); ++j) {
      const cplx expect = (f(op.point(std::size_t(i))) - f(op.point(std::size_t(j)))) * op.entries(i, j);
      REQUIRE(r.matrix(i, j) == expect);
    }
  // Schur bound: four neighbours, each entry at most 1/5 in modulus
  CHECK(r.norm <= 0.8 + 1e-12);
  CHECK(r.norm > 0.0);
  CHECK_THAT(r.ratio, WithinRel(r.norm / (std::numbers::e / 5.0), 1e-15));
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(r.matrix);
  CHECK_THAT(r.norm, WithinRel(svd.singularValues()(0), 1e-10));
  CHECK_THAT(r.norm, WithinAbs(0.386370, 1e-6));
}

TEST_CASE("IMS localization identity") {
  std::mt19937_64 gen(11);
  SECTION("f = 1 leaves the quadratic form unchanged") {
    const auto h = random_hermitian(gen, 30);
    const auto phi = random_vector(gen, 30);
    const auto r = ims_identity_check(phi, Eigen::VectorXd::Ones(30), h, 0.4);
    CHECK(r.residual <= 1e-12 * (1.0 + phi.squaredNorm() * h.norm()));
  }
  SECTION("random 50 x 50 operators") {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const auto h = random_hermitian(gen, 50);
      const auto phi = random_vector(gen, 50);
      Eigen::VectorXd f(50);
      for (auto& v : f) v = unit(gen);
      const auto r0 = ims_identity_check(phi, f, h, 0.0);
      CHECK(r0.relative <= 1e-10);
      for (double E : {-3.0, 1.5, 10.0}) {
        const auto rE = ims_identity_check(phi, f, h, E);
        CHECK(rE.relative <= 1e-10);
        CHECK(std::abs(rE.residual - r0.residual) <= 1e-12 * (h.norm() + std::abs(E)) * phi.squaredNorm());
      }
    }
  }
  SECTION("lattice form with a plateau on a Harper box") {
    const GHOModel model{builtin::harper(1.0), builtin::constant_field(1.0), "harper"};
    const auto op = assemble(model, 0.5, BoxRegion({0, 0}, 8));
    const auto phi = random_state(gen, 8, 80);
    const auto r = ims_identity_check(phi, plateau_function(3, {1, -1}), op, -0.7);
    CHECK(r.relative <= 1e-10);
    CHECK_THROWS_AS(ims_identity_check(random_state(gen, 20, 40), plateau_function(3, {0, 0}), op, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("lattice sums and the elementary supremum") {
  CHECK(schur_row_sum(0.5) > schur_row_sum(1.0));
  // sum over Z^2 of exp(-|y|_2), brute force over a box large enough that the rest is below 1e-14
  double brute = 0.0;
  for (int i = -60; i <= 60; ++i)
    for (int j = -60; j <= 60; ++j) brute += std::exp(-std::hypot(double(i), double(j)));
  CHECK_THAT(schur_row_sum(2.0), WithinRel(brute, 1e-12));
  CHECK_THAT(schur_row_sum(2.0), WithinAbs(6.507242, 1e-6));
  double worst = 0.0;
  for (double beta : {1.0, 0.5, 0.25, 0.125}) worst = std::max(worst, beta * beta * schur_row_sum(beta));
  // the continuum value of beta^2 sum is 8 pi; the lattice adds a small correction
  CHECK(worst <= 1.01 * 8.0 * std::numbers::pi);

  CHECK_THAT(norm_bound_H(2.0, 0.7), WithinRel(2.0 * norm_bound_H(1.0, 0.7), 1e-15));
  CHECK(norm_bound_H(std::numbers::e, 1.0) >= 4.0);
  CHECK(norm_bound_H(1.0, 0.5) > norm_bound_H(1.0, 1.0));

  CHECK_THAT(sup_xm_exp(1.0, 1.0), WithinRel(std::exp(-1.0), 1e-15));
  CHECK_THAT(sup_xm_exp(2.0, 1.0), WithinRel(4.0 * std::exp(-2.0), 1e-15));
  CHECK_THAT(sup_xm_exp(1.0, 2.0), WithinRel(0.5 * std::exp(-1.0), 1e-15));
  for (auto [m, alpha] : {std::pair{1.0, 1.0}, {2.5, 0.7}, {7.0, 3.0}, {0.3, 0.2}}) {
    // golden-section refinement of a coarse scan
    auto g = [m = m, alpha = alpha](double x) { return std::pow(x, m) * std::exp(-alpha * x); };
    double best = 0.0, arg = 0.0;
    for (double x = 1e-3; x < 50.0; x += 1e-3)
      if (g(x) > best) best = g(x), arg = x;
    double lo = arg - 1e-3, hi = arg + 1e-3;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int k = 0; k < 100; ++k) {
      const double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
      (g(c) > g(d) ? hi : lo) = (g(c) > g(d) ? d : c);
    }
    CHECK_THAT(sup_xm_exp(m, alpha), WithinAbs(g(0.5 * (lo + hi)), 1e-9));
  }
}
