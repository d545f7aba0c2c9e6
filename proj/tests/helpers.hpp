#pragma once

#include <cmath>
#include <random>

#include "bwflow/opcore.hpp"
#include "bwflow/spec.hpp"

namespace testing {

using bwflow::Complex;
using bwflow::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = Complex(normal(rng), normal(rng));
  return m;
}

inline Matrix random_unitary(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n));
  return qr.householderQ() * Matrix::Identity(n, n);
}

inline Matrix random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
  Matrix m = random_matrix(rng, n);
  return 0.5 * (m + m.adjoint());
}

inline Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  Matrix m = random_matrix(rng, n);
  return 0.5 * (m + m.transpose());
}

inline Matrix diag(std::initializer_list<double> values) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

inline Matrix antidiag2(double b) {
  Matrix m(2, 2);
  m << 0, b, b, 0;
  return m;
}

// Random spec with omega positive definite and b scaled so that
// omega - 4 b omega^-T bbar keeps a margin (scale 0.8 of the boundary).
inline bwflow::QuadraticSpec random_a3_spec(std::mt19937_64& rng, Eigen::Index n) {
  Matrix a = random_matrix(rng, n);
  Matrix omega = a * a.adjoint() + 0.5 * Matrix::Identity(n, n);
  Matrix b = random_symmetric(rng, n);
  Matrix s = b * omega.conjugate().inverse() * b.conjugate();
  Eigen::SelfAdjointEigenSolver<Matrix> es(omega);
  Matrix root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                es.eigenvectors().adjoint();
  Matrix scaled = 4.0 * root * s * root;
  double top = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (scaled + scaled.adjoint())).eigenvalues().maxCoeff();
  double factor = 0.8 / std::sqrt(top);
  return bwflow::QuadraticSpec::make(omega, factor * b, 0.0, "random");
}

}  // namespace testing
