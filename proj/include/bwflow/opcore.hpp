#pragma once

#include <complex>
#include <string_view>

#include <Eigen/Dense>

#include "bwflow/errors.hpp"

namespace bwflow {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kDefaultSymTol = 1e-10;
inline constexpr double kDefaultKerTol = 1e-10;

enum class Role { hermitian, symmetric, general };

// Square complex matrix tagged with the symmetry it is supposed to carry.
// Construction projects onto that symmetry and remembers how far off the
// input was, so callers can reject sloppy input instead of silently fixing it.
class OneParticleOperator {
 public:
  OneParticleOperator() = default;
  OneParticleOperator(Matrix m, Role role);

  static OneParticleOperator hermitian(Matrix m) { return {std::move(m), Role::hermitian}; }
  static OneParticleOperator symmetric(Matrix m) { return {std::move(m), Role::symmetric}; }

  const Matrix& matrix() const noexcept { return m_; }
  Role role() const noexcept { return role_; }
  // Relative size of the part removed by the projection.
  double deviation() const noexcept { return deviation_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

 private:
  Matrix m_;
  Role role_ = Role::general;
  double deviation_ = 0.0;
};

enum class Involution { transpose, conjugate, adjoint };

Matrix involution(const Matrix& a, Involution which);

double hs_norm(const Matrix& a);
double op_norm(const Matrix& a);

Matrix hermitize(const Matrix& a);
Matrix symmetrize(const Matrix& a);

double hermitian_defect(const Matrix& a);
double symmetric_defect(const Matrix& a);

RealVector eigvals_hermitian(const Matrix& a);
double min_eig_hermitian(const Matrix& a);
double max_eig_hermitian(const Matrix& a);

// Principal square root of a PSD matrix. Eigenvalues in [-psdTol*scale, 0)
// are clamped to zero; anything more negative raises NotPSD.
Matrix psd_sqrt(const Matrix& a, double psdTol = kDefaultSymTol);

// a^alpha on the range of a PSD matrix; kernel eigenvalues (<= kerTol*scale)
// map to zero for any alpha, including negative alpha.
Matrix psd_power(const Matrix& a, double alpha, double kerTol = kDefaultKerTol);

// omega^(-s) * b, restricted to the range of omega.
// Raises KernelOverlap if the columns of b reach into ker(omega).
Matrix range_inverse_power_times(const Matrix& omega, double s, const Matrix& b,
                                 double kerTol = kDefaultKerTol);

// b * (omega^T)^(-p) * conj(b). With omega hermitian, omega^T = conj(omega).
Matrix sandwich(const Matrix& b, const Matrix& omega, int p, double kerTol = kDefaultKerTol);

// exp(scale * h) for hermitian h.
Matrix expm_hermitian(const Matrix& h, double scale);

// Unitary from a hermitian generator: exp(-i * scale * h).
Matrix unitary_from_hermitian(const Matrix& h, double scale);

}  // namespace bwflow
