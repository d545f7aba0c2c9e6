#include "bwflow/analytic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bwflow::analytic {

namespace {

void require_positive(const Block& block) {
  if (!(block.omegaMinus > 0.0) || !(block.omegaPlus > 0.0)) {
    std::ostringstream msg;
    msg << "block diagonal entries must be positive, got (" << block.omegaMinus << ", " << block.omegaPlus
        << ")";
    throw Error(ErrorKind::OutOfRange, msg.str());
  }
}

}  // namespace

QuadraticSpec block_spec(const BlockModelParams& params, std::string label) {
  const auto n = static_cast<Eigen::Index>(2 * params.blocks.size());
  Matrix omega = Matrix::Zero(n, n);
  Matrix b = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < params.blocks.size(); ++k) {
    const Block& block = params.blocks[k];
    require_positive(block);
    auto i = static_cast<Eigen::Index>(2 * k);
    omega(i, i) = block.omegaMinus;
    omega(i + 1, i + 1) = block.omegaPlus;
    b(i, i + 1) = block.b;
    b(i + 1, i) = block.b;
  }
  return QuadraticSpec::make(omega, b, 0.0, std::move(label));
}

bool is_equal_product(const Block& block) {
  double product = block.omegaMinus * block.omegaPlus;
  return std::abs(product - 4.0 * block.b * block.b) <= 1e-12 * std::max(1.0, product);
}

BlockState exact_equal_product(double omegaMinus, double omegaPlus, double b, double t) {
  if (!is_equal_product({omegaMinus, omegaPlus, b}))
    throw Error(ErrorKind::NotOnManifold, "equal-product branch needs omegaPlus*omegaMinus = 4b^2");
  if (omegaMinus > omegaPlus) {
    BlockState swapped = exact_equal_product(omegaPlus, omegaMinus, b, t);
    return {swapped.omegaPlus, swapped.omegaMinus, swapped.bSquared};
  }
  double delta = omegaPlus - omegaMinus;
  if (delta <= 1e-12 * std::max(1.0, omegaPlus)) {
    double om = omegaMinus / (4.0 * t * omegaMinus + 1.0);
    double op = omegaPlus / (4.0 * t * omegaPlus + 1.0);
    double denom = 4.0 * t * omegaPlus + 1.0;
    return {om, op, omegaPlus * omegaPlus / (4.0 * denom * denom)};
  }
  double decay = std::exp(-4.0 * delta * t);
  double om = omegaMinus * delta / (omegaPlus * std::exp(4.0 * delta * t) - omegaMinus);
  double denom = omegaPlus - omegaMinus * decay;
  double op = omegaPlus * delta / denom;
  return {om, op, b * b * delta * delta * decay / (denom * denom)};
}

BlockState exact_generic(double omegaMinus, double omegaPlus, double b, double t) {
  if (!(omegaMinus * omegaPlus > 4.0 * b * b))
    throw Error(ErrorKind::NotInRegime, "generic branch needs omegaPlus*omegaMinus > 4b^2");
  double delta = omegaPlus - omegaMinus;
  double sigma = omegaPlus + omegaMinus;
  double rho = std::sqrt(sigma * sigma - 16.0 * b * b);
  double decay = std::exp(-4.0 * rho * t);
  double denom = rho + sigma + (rho - sigma) * decay;
  auto h = [&](double d) {
    return ((rho + d) * (rho + sigma) + (rho - d) * (sigma - rho) * decay) / (2.0 * denom);
  };
  return {h(-delta), h(delta), 4.0 * rho * rho * b * b * decay / (denom * denom)};
}

BlowupState exact_blowup(double b, double t) {
  if (!(b > 0.0)) throw Error(ErrorKind::OutOfRange, "blow-up example needs b > 0");
  double tMax = std::numbers::pi / (16.0 * b);
  if (t >= tMax || t < 0.0) {
    std::ostringstream msg;
    msg << "t=" << t << " outside [0, " << tMax << ")";
    throw Error(ErrorKind::PastBlowup, msg.str());
  }
  double tangent = std::tan(8.0 * b * t);
  return {-2.0 * b * tangent, b * std::sqrt(tangent * tangent + 1.0), tMax};
}

BlockState exact_block(const Block& block, double t) {
  if (block.b == 0.0) return {block.omegaMinus, block.omegaPlus, 0.0};
  if (is_equal_product(block)) return exact_equal_product(block.omegaMinus, block.omegaPlus, block.b, t);
  return exact_generic(block.omegaMinus, block.omegaPlus, block.b, t);
}

Matrix exact_limit_block(const BlockModelParams& params) {
  const auto n = static_cast<Eigen::Index>(2 * params.blocks.size());
  Matrix limit = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < params.blocks.size(); ++k) {
    const Block& block = params.blocks[k];
    require_positive(block);
    if (block.omegaMinus * block.omegaPlus < 4.0 * block.b * block.b && !is_equal_product(block))
      throw Error(ErrorKind::NotInRegime, "limit needs omegaPlus*omegaMinus >= 4b^2 in every block");
    Matrix omega(2, 2), swapped(2, 2), b(2, 2);
    omega << block.omegaMinus, 0, 0, block.omegaPlus;
    swapped << block.omegaPlus, 0, 0, block.omegaMinus;
    b << 0, block.b, block.b, 0;
    Matrix sMinus = 0.5 * (omega - swapped);
    Matrix sPlus = 0.5 * (omega + swapped);
    Matrix inner = sPlus * sPlus - 4.0 * b * b.conjugate();
    auto i = static_cast<Eigen::Index>(2 * k);
    limit.block(i, i, 2, 2) = sMinus + psd_sqrt(inner, 1e-12);
  }
  return limit;
}

BlockModelParams pivotal_params(int k) {
  if (k < 1) throw Error(ErrorKind::OutOfRange, "pivotal family needs K >= 1");
  BlockModelParams params;
  for (int j = 1; j <= k; ++j) {
    double b = std::ldexp(1.0, -j);
    double omega = 2.0 * std::numbers::sqrt2 * b;
    params.blocks.push_back({omega, omega, b});
  }
  return params;
}

BlockModelParams mixed_params(double b1, int k) {
  if (!(b1 > 0.5 && b1 < 1.0 / std::numbers::sqrt2))
    throw Error(ErrorKind::OutOfRange, "mixed family needs b1 in (1/2, 1/sqrt(2))");
  if (k < 2) throw Error(ErrorKind::OutOfRange, "mixed family needs K >= 2");
  BlockModelParams params;
  params.blocks.push_back({1.0, 2.0, b1});
  for (int j = 2; j <= k; ++j) {
    double omega = std::pow(0.75, j);
    params.blocks.push_back({omega, omega, std::ldexp(1.0, -j)});
  }
  return params;
}

QuadraticSpec pivotal_family(int k) {
  return block_spec(pivotal_params(k), "pivotal K=" + std::to_string(k));
}

QuadraticSpec mixed_family(double b1, int k) {
  std::ostringstream label;
  label << "mixed b1=" << b1 << " K=" << k;
  return block_spec(mixed_params(b1, k), label.str());
}

ExactState exact_block_state(const BlockModelParams& params, double t, double c0, double scalarSign) {
  const auto n = static_cast<Eigen::Index>(2 * params.blocks.size());
  ExactState state{Matrix::Zero(n, n), Matrix::Zero(n, n), c0};
  double traceDrop = 0.0;
  for (std::size_t k = 0; k < params.blocks.size(); ++k) {
    const Block& block = params.blocks[k];
    BlockState s = exact_block(block, t);
    auto i = static_cast<Eigen::Index>(2 * k);
    state.omega(i, i) = s.omegaMinus;
    state.omega(i + 1, i + 1) = s.omegaPlus;
    double bt = std::copysign(std::sqrt(s.bSquared), block.b);
    state.b(i, i + 1) = bt;
    state.b(i + 1, i) = bt;
    traceDrop += (block.omegaMinus - s.omegaMinus) + (block.omegaPlus - s.omegaPlus);
  }
  state.c = c0 + 0.5 * scalarSign * traceDrop;
  return state;
}

}  // namespace bwflow::analytic
