#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "bwflow/analytic.hpp"
#include "bwflow/fock.hpp"
#include "helpers.hpp"

using namespace bwflow;
using namespace bwflow::fock;

namespace {

Eigen::Index binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<Eigen::Index>(std::llround(r));
}

}  // namespace

TEST_CASE("basis") {
  for (int modes : {1, 2, 3})
    for (int cutoff : {0, 1, 4, 7}) {
      TruncatedFock f(modes, cutoff);
      CHECK(f.dim() == binomial(modes + cutoff, modes));
      for (int sector = 0; sector <= cutoff; ++sector) CHECK(f.sector_dim(sector) == binomial(modes + sector, modes));
    }
  TruncatedFock f(2, 2);
  std::vector<Occupation> expected{{0, 0}, {0, 1}, {1, 0}, {0, 2}, {1, 1}, {2, 0}};
  CHECK(f.basis() == expected);
  CHECK(f.index_of({1, 1}) == 4);
  CHECK(f.index_of({2, 1}) == -1);
  CHECK(f.total(5) == 2);
  CHECK(build_basis(2, 2).basis() == expected);
}

TEST_CASE("size limit") {
  CHECK_THROWS_AS(TruncatedFock(3, 40, 1000), Error);
  try {
    TruncatedFock(4, 30, 500);
    FAIL("expected SizeLimit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SizeLimit);
  }
  ::setenv("BWFLOW_MAX_DIM", "123", 1);
  CHECK(max_dim_from_env() == 123);
  CHECK_THROWS_AS(TruncatedFock(2, 20), Error);
  ::unsetenv("BWFLOW_MAX_DIM");
  CHECK(max_dim_from_env() == kDefaultMaxDim);
}

TEST_CASE("ladders") {
  TruncatedFock f(1, 6);
  Matrix a = ladder(f, 0, Ladder::annihilate);
  for (int n = 1; n <= 6; ++n) CHECK(a(n - 1, n).real() == doctest::Approx(std::sqrt(n)).epsilon(1e-15));
  CHECK((ladder(f, 0, Ladder::create) - a.adjoint()).norm() == 0.0);

  TruncatedFock g(3, 5);
  auto inner = g.sector_dim(4);
  Matrix id = Matrix::Identity(inner, inner);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      Matrix ak = ladder(g, k, Ladder::annihilate), al = ladder(g, l, Ladder::annihilate);
      Matrix adl = ladder(g, l, Ladder::create);
      Matrix ccr = ak * adl - adl * ak;
      Matrix expected = k == l ? id : Matrix::Zero(inner, inner);
      CHECK((ccr.topLeftCorner(inner, inner) - expected).norm() < 1e-14);
      CHECK((ak * al - al * ak).norm() < 1e-14);
    }
  Matrix n = Matrix::Zero(g.dim(), g.dim());
  for (int k = 0; k < 3; ++k) n += ladder(g, k, Ladder::create) * ladder(g, k, Ladder::annihilate);
  CHECK((n - number_op(g)).norm() < 1e-14);
}

TEST_CASE("hamiltonian") {
  QuadraticSpec free = QuadraticSpec::make(testing::diag({1.0, 2.5}), Matrix::Zero(2, 2), 0.3);
  TruncatedFock f(2, 6);
  Matrix h = hamiltonian_op(f, free);
  for (Eigen::Index i = 0; i < f.dim(); ++i) {
    const Occupation& occ = f.basis()[static_cast<std::size_t>(i)];
    CHECK(h(i, i).real() == doctest::Approx(0.3 + occ[0] + 2.5 * occ[1]));
  }
  CHECK(n_diag_residual(f, h) == 0.0);

  std::mt19937_64 rng(4);
  QuadraticSpec random = testing::random_a3_spec(rng, 2);
  Matrix hr = hamiltonian_op(f, random);
  CHECK(hermiticity_residual(hr) == 0.0);
  CHECK(n_diag_residual(f, hr) > 1e-3);
  CHECK_THROWS_AS(hamiltonian_op(TruncatedFock(3, 2), random), Error);
}

TEST_CASE("generator") {
  std::mt19937_64 rng(8);
  Matrix b = testing::random_symmetric(rng, 2);
  TruncatedFock f(2, 8);
  Matrix g = generator_op(f, b);
  CHECK(hermitian_defect(g) < 1e-15);
  // [G, a_j] = -4i sum_l b_jl a_l^* away from the cutoff
  auto inner = f.sector_dim(6);
  for (int j = 0; j < 2; ++j) {
    Matrix aj = ladder(f, j, Ladder::annihilate);
    Matrix expected = Matrix::Zero(f.dim(), f.dim());
    for (int l = 0; l < 2; ++l) expected += Complex(0, -4) * b(j, l) * ladder(f, l, Ladder::create);
    Matrix comm = g * aj - aj * g;
    CHECK((comm - expected).topLeftCorner(inner, inner).norm() < 1e-12);
  }
  CHECK(generator_op(f, Matrix::Zero(2, 2)).norm() == 0.0);
  CHECK(interior(f, g, 3).rows() == f.sector_dim(3));
}

TEST_CASE("propagation") {
  TruncatedFock f(1, 30);
  Matrix b = testing::diag({0.1});
  bogoliubov::FunctionPath constant([b](double) { return b; }, 0.0, 2.0);
  Propagator p = propagate(f, constant, 0.0, 1.5);
  CHECK(p.unitarityResidual < 1e-8);
  Matrix exact = unitary_from_hermitian(generator_op(f, b), 1.5);
  CHECK((p.u - exact).norm() < 1e-8);

  bogoliubov::FunctionPath varying([](double t) { return testing::diag({0.1 * std::cos(t)}); }, 0.0, 2.0);
  Matrix direct = propagate(f, varying, 0.0, 2.0).u;
  Matrix joined = propagate(f, varying, 0.7, 2.0).u * propagate(f, varying, 0.0, 0.7).u;
  CHECK((direct - joined).topLeftCorner(f.sector_dim(20), f.sector_dim(20)).norm() < 1e-8);
  CHECK((propagate(f, varying, 1.0, 1.0).u - Matrix::Identity(f.dim(), f.dim())).norm() == 0.0);

  QuadraticSpec spec = QuadraticSpec::make(testing::diag({2}), testing::diag({0.5}), 0.0);
  CHECK(conjugation_residual(f, Matrix::Identity(f.dim(), f.dim()), spec, spec, 10) == 0.0);
}

TEST_CASE("ground energies") {
  QuadraticSpec one = QuadraticSpec::make(testing::diag({2}), testing::diag({0.5}), 0.0);
  GroundEnergy e1 = ground_energy(TruncatedFock(1, 40), one);
  CHECK(e1.energy == doctest::Approx((std::sqrt(3.0) - 2) / 2).epsilon(1e-4));
  CHECK(e1.convergenceEstimate < 1e-4);

  QuadraticSpec shifted = QuadraticSpec::make(testing::diag({2}), testing::diag({0.5}), 1.25);
  CHECK(ground_energy(TruncatedFock(1, 40), shifted).energy ==
        doctest::Approx(1.25 + (std::sqrt(3.0) - 2) / 2).epsilon(1e-4));

  QuadraticSpec two = analytic::block_spec({{{2, 2, 0.5}}});
  GroundEnergy e2 = ground_energy(TruncatedFock(2, 24), two);
  CHECK(std::abs(e2.energy - (std::sqrt(3.0) - 2)) < 1e-4);
}

TEST_CASE("off-diagonal relative bound") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix b = testing::random_symmetric(rng, 2);
    OffDiagBound bound = offdiag_relative_norm(TruncatedFock(2, 10), b);
    CHECK(bound.holds);
    CHECK(bound.lhs > 0.0);
    CHECK(bound.rhs == doctest::Approx((4 + std::sqrt(2.0)) * b.norm()));
  }
  OffDiagBound zero = offdiag_relative_norm(TruncatedFock(1, 10), Matrix::Zero(1, 1));
  CHECK(zero.lhs == 0.0);
  CHECK(zero.holds);
}
