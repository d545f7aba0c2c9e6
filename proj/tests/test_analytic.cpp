#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bwflow/analytic.hpp"
#include "bwflow/conditions.hpp"
#include "bwflow/flow.hpp"
#include "helpers.hpp"

using namespace bwflow;
using namespace bwflow::analytic;

TEST_CASE("block_spec") {
  QuadraticSpec one = block_spec({{{1, 2, 0.5}}});
  CHECK((one.omega.matrix() - testing::diag({1, 2})).norm() == 0.0);
  CHECK((one.b.matrix() - testing::antidiag2(0.5)).norm() == 0.0);
  CHECK(one.c0 == 0.0);

  QuadraticSpec many = block_spec({{{1, 2, 0.5}, {0.3, 0.4, 0.1}, {2, 2, 0.25}}});
  CHECK(many.dim() == 6);
  double expected = 2 * (0.25 + 0.01 + 0.0625);
  CHECK(many.b.matrix().squaredNorm() == doctest::Approx(expected).epsilon(1e-15));

  CHECK(block_spec({{{1, 2, 0.0}}}).b.matrix().norm() == 0.0);
  CHECK_THROWS_AS(block_spec({{{-1, 2, 0.1}}}), Error);
}

TEST_CASE("equal-product closed form") {
  BlockState s = exact_equal_product(1, 4, 1, 1.0);
  CHECK(s.omegaMinus == doctest::Approx(3.0 / (4.0 * std::exp(12.0) - 1.0)).epsilon(1e-14));
  BlockState flat = exact_equal_product(2, 2, 1, 1.0);
  CHECK(flat.omegaMinus == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
  CHECK(flat.omegaPlus == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
  CHECK(flat.bSquared == doctest::Approx(1.0 / 81.0).epsilon(1e-15));
  BlockState start = exact_equal_product(1, 4, 1, 0.0);
  CHECK(start.omegaMinus == doctest::Approx(1.0));
  CHECK(start.omegaPlus == doctest::Approx(4.0));
  CHECK(start.bSquared == doctest::Approx(1.0));
  CHECK_THROWS_AS(exact_equal_product(1, 2, 1, 0.5), Error);
}

TEST_CASE("generic closed form") {
  double rho = std::sqrt(5.0);
  BlockState late = exact_generic(1, 2, 0.5, 20.0);
  CHECK(late.omegaMinus == doctest::Approx((rho - 1) / 2).epsilon(1e-14));
  CHECK(late.omegaPlus == doctest::Approx((rho + 1) / 2).epsilon(1e-14));
  CHECK(late.bSquared < 1e-30);
  BlockState free = exact_generic(1, 2, 0.0, 3.0);
  CHECK(free.omegaMinus == doctest::Approx(1.0));
  CHECK(free.omegaPlus == doctest::Approx(2.0));
  CHECK(free.bSquared == 0.0);
  BlockState start = exact_generic(0.7, 1.9, 0.3, 0.0);
  CHECK(start.omegaMinus == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(start.omegaPlus == doctest::Approx(1.9).epsilon(1e-14));
  CHECK(start.bSquared == doctest::Approx(0.09).epsilon(1e-14));
  CHECK_THROWS_AS(exact_generic(1, 2, 0.8, 1.0), Error);
}

TEST_CASE("blow-up closed form") {
  BlowupState start = exact_blowup(1.0, 0.0);
  CHECK(start.tMax == doctest::Approx(std::numbers::pi / 16).epsilon(1e-15));
  CHECK(start.tMax == doctest::Approx(0.1963495).epsilon(1e-7));
  CHECK(start.omega == 0.0);
  CHECK(start.b == 1.0);
  BlowupState mid = exact_blowup(1.0, 0.15);
  CHECK(mid.b == doctest::Approx(1.0 / std::cos(1.2)).epsilon(1e-14));
  CHECK(mid.b == doctest::Approx(2.7597).epsilon(1e-4));
  try {
    exact_blowup(1.0, 0.2);
    FAIL("expected PastBlowup");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PastBlowup);
  }
}

TEST_CASE("limit of a block spec") {
  double rho = std::sqrt(5.0);
  RealVector eig = eigvals_hermitian(exact_limit_block({{{1, 2, 0.5}}}));
  CHECK(eig(0) == doctest::Approx((rho - 1) / 2).epsilon(1e-14));
  CHECK(eig(1) == doctest::Approx((rho + 1) / 2).epsilon(1e-14));
  CHECK((exact_limit_block({{{1, 2, 0.0}}}) - testing::diag({1, 2})).norm() < 1e-15);
  Matrix commuting = exact_limit_block({{{2, 2, 0.5}}});
  QuadraticSpec spec = block_spec({{{2, 2, 0.5}}});
  Matrix omega = spec.omega.matrix(), b = spec.b.matrix();
  CHECK((commuting - psd_sqrt(omega * omega - 4.0 * b * b.conjugate())).norm() < 1e-14);
  CHECK((commuting - std::sqrt(3.0) * Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK_THROWS_AS(exact_limit_block({{{1, 2, 0.9}}}), Error);
}

TEST_CASE("families") {
  QuadraticSpec pivotal = pivotal_family(3);
  CHECK(pivotal.dim() == 6);
  for (int k = 0; k < 3; ++k) {
    double b = std::ldexp(1.0, -(k + 1));
    CHECK(pivotal.b.matrix()(2 * k, 2 * k + 1).real() == b);
    CHECK(pivotal.omega.matrix()(2 * k, 2 * k).real() == doctest::Approx(2 * std::numbers::sqrt2 * b));
  }
  CHECK(conditions::check_a3_a6(pivotal).holds(conditions::Condition::A3));

  QuadraticSpec mixed = mixed_family(0.6, 4);
  CHECK(mixed.dim() == 8);
  CHECK(mixed.omega.matrix()(2, 2).real() == doctest::Approx(0.5625));
  CHECK(mixed_family(0.55, 2).dim() == 4);
  CHECK_THROWS_AS(mixed_family(0.4, 3), Error);
  CHECK_THROWS_AS(mixed_family(0.6, 1), Error);
}

namespace {

// Finite-difference derivative of the block closed form against the flow rhs.
void check_ode(const Block& block, double t) {
  double h = 1e-5;
  BlockState lo = exact_block(block, t - h), mid = exact_block(block, t), hi = exact_block(block, t + h);
  QuadraticSpec spec = block_spec({{block}});
  ExactState state = exact_block_state({{block}}, t, 0.0, -1.0);
  flow::FlowDerivative d = flow::rhs({t, state.omega, state.b, 0.0});
  double scale = 1.0 + std::abs(d.dOmega(0, 0));
  CHECK(std::abs((hi.omegaMinus - lo.omegaMinus) / (2 * h) - d.dOmega(0, 0).real()) < 1e-7 * scale);
  CHECK(std::abs((hi.omegaPlus - lo.omegaPlus) / (2 * h) - d.dOmega(1, 1).real()) < 1e-7 * scale);
  double bLo = std::sqrt(lo.bSquared), bHi = std::sqrt(hi.bSquared);
  CHECK(std::abs((bHi - bLo) / (2 * h) - d.dB(0, 1).real()) < 1e-7 * (1.0 + std::abs(d.dB(0, 1))));
  (void)mid;
  (void)spec;
}

}  // namespace

TEST_CASE("closed forms solve the flow equations") {
  for (double t : {0.1, 0.5, 1.3}) {
    check_ode({1, 2, 0.5}, t);
    check_ode({0.3, 2.5, 0.4}, t);
    check_ode({1, 4, 1}, t);
    check_ode({2, 2, 1}, t);
  }
}

TEST_CASE("generic constants of motion") {
  for (auto block : {Block{1, 2, 0.5}, Block{0.3, 2.5, 0.4}}) {
    double c0 = block.omegaMinus * block.omegaMinus + block.omegaPlus * block.omegaPlus - 8 * block.b * block.b;
    double delta0 = block.omegaPlus - block.omegaMinus;
    for (double t : {0.0, 0.2, 1.0, 3.0, 10.0}) {
      BlockState s = exact_generic(block.omegaMinus, block.omegaPlus, block.b, t);
      CHECK(std::abs(s.omegaMinus * s.omegaMinus + s.omegaPlus * s.omegaPlus - 8 * s.bSquared - c0) < 1e-12);
      CHECK(std::abs(s.omegaPlus - s.omegaMinus - delta0) < 1e-12);
    }
  }
}

TEST_CASE("blow-up solution satisfies the integro-differential form") {
  double b = 1.0;
  for (double t : {0.05, 0.1, 0.15}) {
    // int_0^t b_tau^2 by composite Simpson
    const int m = 2000;
    double sum = 0.0;
    for (int i = 0; i <= m; ++i) {
      double tau = t * i / m;
      double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      double bt = exact_blowup(b, tau).b;
      sum += w * bt * bt;
    }
    double integral = sum * t / (3.0 * m);
    double h = 1e-6;
    double derivative = (exact_blowup(b, t + h).b - exact_blowup(b, t - h).b) / (2 * h);
    double expected = 64.0 * exact_blowup(b, t).b * integral;
    CHECK(std::abs(derivative - expected) < 1e-6 * std::abs(expected));
  }
}

TEST_CASE("exact block state carries c through the trace identity") {
  ExactState s = exact_block_state({{{1, 2, 0.5}}}, 1.0, 0.25, -1.0);
  BlockState b = exact_generic(1, 2, 0.5, 1.0);
  CHECK(s.c == doctest::Approx(0.25 - 0.5 * ((1 - b.omegaMinus) + (2 - b.omegaPlus))));
  CHECK(s.b(0, 1).real() == doctest::Approx(std::sqrt(b.bSquared)));
}
