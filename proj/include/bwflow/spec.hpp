#pragma once

#include <string>

#include "bwflow/opcore.hpp"

namespace bwflow {

// Quadratic bosonic Hamiltonian
//   H = sum omega_kl a_k^* a_l + b_kl a_k^* a_l^* + conj(b_kl) a_k a_l + c0.
struct QuadraticSpec {
  OneParticleOperator omega;
  OneParticleOperator b;
  double c0 = 0.0;
  std::string label;

  Eigen::Index dim() const noexcept { return omega.dim(); }

  // Projects omega/b onto hermitian/symmetric and raises NotOnManifold when
  // either input was further than symTol (relative) from it.
  static QuadraticSpec make(const Matrix& omega, const Matrix& b, double c0 = 0.0,
                            std::string label = {}, double symTol = kDefaultSymTol);
};

}  // namespace bwflow
