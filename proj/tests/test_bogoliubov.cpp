#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bwflow/analytic.hpp"
#include "bwflow/bogoliubov.hpp"
#include "bwflow/fock.hpp"
#include "helpers.hpp"

using namespace bwflow;
using namespace bwflow::bogoliubov;

namespace {

double map_distance(const BogoliubovMap& a, const BogoliubovMap& b) {
  return (a.u - b.u).norm() + (a.v - b.v).norm();
}

BogoliubovMap scalar_map(double u, double v) {
  BogoliubovMap m = BogoliubovMap::identity(1);
  m.u(0, 0) = u;
  m.v(0, 0) = v;
  return m;
}

// u = G cosh(a) H^*, v = G sinh(a) H^T
BogoliubovMap random_symplectic(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> unif(0.0, 1.5);
  Matrix g = testing::random_unitary(rng, n), h = testing::random_unitary(rng, n);
  RealVector a(n);
  for (Eigen::Index k = 0; k < n; ++k) a(k) = unif(rng);
  BogoliubovMap m = BogoliubovMap::identity(n);
  m.u = g * a.array().cosh().matrix().cast<Complex>().asDiagonal() * h.adjoint();
  m.v = g * a.array().sinh().matrix().cast<Complex>().asDiagonal() * h.transpose();
  return m;
}

FunctionPath constant_path(const Matrix& b, double end) {
  return FunctionPath([b](double) { return b; }, 0.0, end);
}

}  // namespace

TEST_CASE("symplectic residuals") {
  CHECK(symplectic_residuals(BogoliubovMap::identity(3)).max() == 0.0);
  CHECK(symplectic_residuals(scalar_map(std::cosh(0.3), std::sinh(0.3))).max() < 1e-14);
  CHECK(symplectic_residuals(scalar_map(1.0, 0.5)).uuStar == doctest::Approx(0.25));
  std::mt19937_64 rng(1);
  CHECK(symplectic_residuals(random_symplectic(rng, 4)).max() < 1e-12);
}

TEST_CASE("integrate_uv trivial cases") {
  FunctionPath path = constant_path(testing::antidiag2(0.5), 2.0);
  CHECK(map_distance(integrate_uv(path, 0.7, 0.7), BogoliubovMap::identity(2)) == 0.0);
  FunctionPath zero = constant_path(Matrix::Zero(2, 2), 2.0);
  CHECK(map_distance(integrate_uv(zero, 0.0, 2.0), BogoliubovMap::identity(2)) == 0.0);
  try {
    integrate_uv(path, 0.0, 3.0);
    FAIL("expected PathGap");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PathGap);
  }
}

TEST_CASE("integrate_uv with constant pairing") {
  // u'' = 16 |b|^2 u gives cosh / -sinh
  FunctionPath path = constant_path(testing::diag({0.25}), 1.0);
  BogoliubovMap m = integrate_uv(path, 0.0, 1.0);
  CHECK(m.u(0, 0).real() == doctest::Approx(std::cosh(1.0)).epsilon(1e-10));
  CHECK(m.v(0, 0).real() == doctest::Approx(-std::sinh(1.0)).epsilon(1e-10));
}

TEST_CASE("maps along the flow") {
  QuadraticSpec spec = analytic::block_spec({{{1, 2, 0.5}}});
  flow::Trajectory traj = flow::integrate(spec, 5.0);
  TrajectoryPath path(traj);
  BogoliubovMap m = integrate_uv(path, 0.0, 2.0);
  CHECK(symplectic_residuals(m).max() < 1e-8);

  double intB = integrate_hs_norm(path, 0.0, 2.0);
  NormBounds bounds = norm_bounds(m, intB);
  CHECK(bounds.uHolds);
  CHECK(bounds.vHolds);
  CHECK(bounds.uLhs < bounds.uRhs);
  CHECK(bounds.vLhs < bounds.vRhs);
  NormBounds trivial = norm_bounds(BogoliubovMap::identity(2), 0.0);
  CHECK(trivial.uHolds);
  CHECK(trivial.vHolds);
  CHECK(trivial.uLhs == trivial.uRhs);

  // against a fixed-step trapezoid of |B| over dense samples
  double sum = 0.0;
  for (int i = 0; i < 4000; ++i) {
    double a = i * 2.0 / 4000, b = (i + 1) * 2.0 / 4000;
    sum += 0.5 * (b - a) * (hs_norm(path.at(a)) + hs_norm(path.at(b)));
  }
  CHECK(intB == doctest::Approx(sum).epsilon(1e-6));

  CoIntegrated co = co_integrate(spec, 2.0);
  CHECK(map_distance(co.map, m) < 1e-7);
  CHECK((co.state.b - path.at(2.0)).norm() < 1e-8);
}

TEST_CASE("commuting flows") {
  // one mode with real b of fixed sign: u = cosh, v = -sinh of 4 int b, so the bound is tight
  QuadraticSpec one = QuadraticSpec::make(testing::diag({2}), testing::diag({0.5}), 0.0);
  TrajectoryPath path1(flow::integrate(one, 3.0));
  BogoliubovMap m1 = integrate_uv(path1, 0.0, 3.0);
  double int1 = integrate_hs_norm(path1, 0.0, 3.0);
  CHECK(m1.v(0, 0).real() < 0.0);
  CHECK(std::abs(m1.v(0, 0)) == doctest::Approx(std::sinh(4 * int1)).epsilon(1e-8));
  CHECK(m1.u(0, 0).real() == doctest::Approx(std::cosh(4 * int1)).epsilon(1e-8));

  // two modes: |v|_2 = sqrt2 sinh(4 int b) against sinh(4 sqrt2 int b), a strict gap
  QuadraticSpec two = analytic::block_spec({{{2, 2, 0.5}}});
  TrajectoryPath path2(flow::integrate(two, 3.0));
  BogoliubovMap m2 = integrate_uv(path2, 0.0, 3.0);
  double int2 = integrate_hs_norm(path2, 0.0, 3.0);
  CHECK(m2.v(0, 1).real() < 0.0);
  CHECK(hs_norm(m2.v) < std::sinh(4 * int2));
  CHECK(std::sinh(4 * int2) - hs_norm(m2.v) > 1e-3);
  CHECK(norm_bounds(m2, int2).vHolds);
}

TEST_CASE("cocycle") {
  QuadraticSpec spec = analytic::block_spec({{{0.4, 1.5, 0.3}, {1, 2, 0.5}}});
  TrajectoryPath path(flow::integrate(spec, 4.0));
  for (auto [s, x, t] : {std::array{0.0, 1.0, 3.0}, std::array{0.5, 2.5, 4.0}, std::array{0.0, 0.2, 0.4}}) {
    BogoliubovMap direct = integrate_uv(path, s, t);
    BogoliubovMap joined = compose(integrate_uv(path, s, x), integrate_uv(path, x, t));
    CHECK(map_distance(direct, joined) < 1e-8);
    CHECK(joined.s == s);
    CHECK(joined.t == t);
  }
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    BogoliubovMap m = random_symplectic(rng, 3);
    CHECK(map_distance(compose(m, inverse(m)), BogoliubovMap::identity(3)) < 1e-10);
    CHECK(map_distance(compose(inverse(m), m), BogoliubovMap::identity(3)) < 1e-10);
  }
}

TEST_CASE("transform_spec") {
  QuadraticSpec spec = analytic::block_spec({{{1, 2, 0.5}}});
  QuadraticSpec same = transform_spec(BogoliubovMap::identity(2), spec);
  CHECK((same.omega.matrix() - spec.omega.matrix()).norm() == 0.0);
  CHECK((same.b.matrix() - spec.b.matrix()).norm() == 0.0);
  CHECK(same.c0 == spec.c0);

  flow::FlowControls controls;
  controls.stopTimes = {0.5, 1.0, 2.0};
  flow::Trajectory traj = flow::integrate(spec, 5.0, controls);
  TrajectoryPath path(traj);
  for (const flow::Sample& s : traj.samples) {
    if (s.state.t != 0.5 && s.state.t != 1.0 && s.state.t != 2.0) continue;
    QuadraticSpec moved = transform_spec(integrate_uv(path, 0.0, s.state.t), spec);
    CHECK((moved.omega.matrix() - s.state.omega).norm() < 1e-6);
    CHECK((moved.b.matrix() - s.state.b).norm() < 1e-6);
    CHECK(moved.c0 == doctest::Approx(s.state.c).epsilon(1e-6));
  }

  CHECK_THROWS_AS(transform_spec(scalar_map(1.0, 0.5), QuadraticSpec::make(testing::diag({1}), testing::diag({0}), 0.0)),
                  Error);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    QuadraticSpec random = testing::random_a3_spec(rng, 3);
    BogoliubovMap m = random_symplectic(rng, 3);
    QuadraticSpec back = transform_spec(inverse(m), transform_spec(m, random));
    CHECK((back.omega.matrix() - random.omega.matrix()).norm() < 1e-8);
    CHECK((back.b.matrix() - random.b.matrix()).norm() < 1e-8);
    CHECK(std::abs(back.c0 - random.c0) < 1e-8);
  }
}

TEST_CASE("transform_spec against Fock conjugation") {
  // squeezing u = cosh r, v = sinh r from constant pairing b = -r/4 over [0, 1]
  double r = 0.3;
  FunctionPath squeeze = constant_path(testing::diag({-r / 4}), 1.0);
  BogoliubovMap m = integrate_uv(squeeze, 0.0, 1.0);
  CHECK(m.u(0, 0).real() == doctest::Approx(std::cosh(r)).epsilon(1e-10));
  CHECK(m.v(0, 0).real() == doctest::Approx(std::sinh(r)).epsilon(1e-10));

  QuadraticSpec plain = QuadraticSpec::make(testing::diag({1.5}), testing::diag({0}), 0.0);
  QuadraticSpec moved = transform_spec(m, plain);
  CHECK(std::abs(moved.b.matrix()(0, 0)) == doctest::Approx(0.5 * 1.5 * std::sinh(2 * r)).epsilon(1e-9));

  fock::TruncatedFock one(1, 40);
  fock::Propagator u = fock::propagate(one, squeeze, 0.0, 1.0);
  CHECK(fock::conjugation_residual(one, u.u, plain, moved, 12) < 1e-6);

  // two modes with a generic pairing, weak enough for the cutoff
  std::mt19937_64 rng(9);
  Matrix b = 0.03 * testing::random_symmetric(rng, 2);
  QuadraticSpec spec = QuadraticSpec::make(testing::diag({1.0, 1.7}), 0.1 * testing::random_symmetric(rng, 2), 0.2);
  FunctionPath path = constant_path(b, 0.5);
  fock::TruncatedFock two(2, 24);
  fock::Propagator p = fock::propagate(two, path, 0.0, 0.5);
  QuadraticSpec image = transform_spec(integrate_uv(path, 0.0, 0.5), spec);
  CHECK(fock::conjugation_residual(two, p.u, spec, image, 8) < 1e-6);
  CHECK(p.unitarityResidual < 1e-8);
}

TEST_CASE("dyson series") {
  QuadraticSpec spec = analytic::block_spec({{{1, 2, 0.5}}});
  TrajectoryPath path(flow::integrate(spec, 5.0));
  BogoliubovMap exact = integrate_uv(path, 0.0, 2.0);
  DysonResult d8 = dyson_uv(path, 0.0, 2.0, 8);
  CHECK(map_distance(d8.map, exact) < 1e-6);
  CHECK(d8.tailBoundU >= 0.0);

  DysonResult d1 = dyson_uv(path, 0.0, 2.0, 1);
  CHECK((d1.map.u - Matrix::Identity(2, 2)).norm() == 0.0);
  // -4 int B by fine trapezoid
  Matrix integral = Matrix::Zero(2, 2);
  const int m = 4000;
  for (int i = 0; i < m; ++i) integral += 0.5 * (2.0 / m) * (path.at(i * 2.0 / m) + path.at((i + 1) * 2.0 / m));
  CHECK((d1.map.v + 4.0 * integral).norm() < 1e-6);
  NormBounds bounds = norm_bounds(d1.map, d1.integralB);
  CHECK(bounds.uHolds);
  CHECK(bounds.vHolds);

  FunctionPath zero = constant_path(Matrix::Zero(2, 2), 1.0);
  CHECK(map_distance(dyson_uv(zero, 0.0, 1.0, 5).map, BogoliubovMap::identity(2)) == 0.0);
  CHECK_THROWS_AS(dyson_uv(zero, 0.0, 2.0, 3), Error);
}

TEST_CASE("generator decomposition") {
  GeneratorDecomposition id = decompose_generator(BogoliubovMap::identity(3));
  CHECK(id.alphas.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(id.hMatrix.norm() < 1e-14);

  GeneratorDecomposition one = decompose_generator(scalar_map(std::cosh(0.3), std::sinh(0.3)));
  REQUIRE(one.alphas.size() == 1);
  CHECK(one.alphas(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(one.hMatrix.norm() < 1e-12);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    BogoliubovMap m = random_symplectic(rng, 4);
    GeneratorDecomposition d = decompose_generator(m);
    CHECK(d.reconstructionResidual < 1e-7);
    CHECK(map_distance(rebuild(d), m) < 1e-7);
    CHECK(hermitian_defect(d.hMatrix) < 1e-10);
    CHECK(std::is_sorted(d.alphas.data(), d.alphas.data() + d.alphas.size(), std::greater<>()));
    Matrix g = d.gBasis, h = d.hBasis;
    CHECK((g.adjoint() * g - Matrix::Identity(4, 4)).norm() < 1e-10);
    CHECK((h.adjoint() * h - Matrix::Identity(4, 4)).norm() < 1e-10);
    // singular values of v are sinh(alpha)
    RealVector sv = Eigen::JacobiSVD<Matrix>(m.v).singularValues();
    for (Eigen::Index k = 0; k < 4; ++k) CHECK(std::sinh(d.alphas(k)) == doctest::Approx(sv(k)).epsilon(1e-9));
  }

  QuadraticSpec spec = analytic::block_spec({{{1, 2, 0.5}}});
  TrajectoryPath path(flow::integrate(spec, 10.0));
  GeneratorDecomposition limit = decompose_generator(integrate_uv(path, 0.0, 10.0));
  CHECK(limit.reconstructionResidual < 1e-8);
  for (Eigen::Index k = 0; k < limit.alphas.size(); ++k)
    CHECK(std::cosh(limit.alphas(k)) * std::cosh(limit.alphas(k)) - std::sinh(limit.alphas(k)) * std::sinh(limit.alphas(k)) ==
          doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(decompose_generator(scalar_map(1.0, 0.5)), Error);
}
