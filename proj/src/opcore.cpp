#include "bwflow/opcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bwflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::KernelOverlap: return "KernelOverlap";
    case ErrorKind::NotReal: return "NotReal";
    case ErrorKind::BlowupDetected: return "BlowupDetected";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::PathGap: return "PathGap";
    case ErrorKind::MapInvalid: return "MapInvalid";
    case ErrorKind::LogBranch: return "LogBranch";
    case ErrorKind::SizeLimit: return "SizeLimit";
    case ErrorKind::NotOnManifold: return "NotOnManifold";
    case ErrorKind::NotInRegime: return "NotInRegime";
    case ErrorKind::PastBlowup: return "PastBlowup";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

using Solver = Eigen::SelfAdjointEigenSolver<Matrix>;

Solver eigensolve(const Matrix& a) {
  Solver es(hermitize(a));
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NotConverged, "hermitian eigensolver failed");
  return es;
}

double spectral_scale(const RealVector& lambda) {
  return lambda.size() == 0 ? 0.0 : lambda.cwiseAbs().maxCoeff();
}

// Columns of the eigenvector matrix whose eigenvalue is <= threshold.
Matrix kernel_basis(const Solver& es, double threshold) {
  const auto& lambda = es.eigenvalues();
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) <= threshold) ++count;
  Matrix basis(lambda.size(), count);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) <= threshold) basis.col(col++) = es.eigenvectors().col(i);
  return basis;
}

Matrix range_power(const Solver& es, double alpha, double threshold) {
  const auto& lambda = es.eigenvalues();
  RealVector mapped(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    mapped(i) = lambda(i) <= threshold ? 0.0 : std::pow(lambda(i), alpha);
  const Matrix& v = es.eigenvectors();
  return v * mapped.asDiagonal() * v.adjoint();
}

void check_psd(const Solver& es, double psdTol, double norm) {
  double lo = es.eigenvalues().size() ? es.eigenvalues().minCoeff() : 0.0;
  if (lo < -psdTol * std::max(norm, 1e-300)) {
    std::ostringstream msg;
    msg << "smallest eigenvalue " << lo << " below -" << psdTol << " * " << norm;
    throw Error(ErrorKind::NotPSD, msg.str());
  }
}

}  // namespace

OneParticleOperator::OneParticleOperator(Matrix m, Role role) : role_(role) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::NotOnManifold, "one-particle operator must be square");
  Matrix projected;
  switch (role) {
    case Role::hermitian: projected = hermitize(m); break;
    case Role::symmetric: projected = symmetrize(m); break;
    case Role::general: projected = m; break;
  }
  double scale = hs_norm(m);
  deviation_ = scale > 0.0 ? hs_norm(m - projected) / scale : 0.0;
  m_ = std::move(projected);
}

Matrix involution(const Matrix& a, Involution which) {
  switch (which) {
    case Involution::transpose: return a.transpose();
    case Involution::conjugate: return a.conjugate();
    case Involution::adjoint: return a.adjoint();
  }
  return a;
}

double hs_norm(const Matrix& a) { return a.norm(); }

double op_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }
Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double hermitian_defect(const Matrix& a) { return (a - a.adjoint()).norm(); }
double symmetric_defect(const Matrix& a) { return (a - a.transpose()).norm(); }

RealVector eigvals_hermitian(const Matrix& a) {
  if (a.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eig_hermitian(const Matrix& a) { return eigvals_hermitian(a).minCoeff(); }
double max_eig_hermitian(const Matrix& a) { return eigvals_hermitian(a).maxCoeff(); }

Matrix psd_sqrt(const Matrix& a, double psdTol) {
  Solver es = eigensolve(a);
  double scale = spectral_scale(es.eigenvalues());
  check_psd(es, psdTol, scale);
  RealVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix psd_power(const Matrix& a, double alpha, double kerTol) {
  Solver es = eigensolve(a);
  double scale = hs_norm(a);
  check_psd(es, kerTol, scale);
  return range_power(es, alpha, kerTol * scale);
}

Matrix range_inverse_power_times(const Matrix& omega, double s, const Matrix& b, double kerTol) {
  Solver es = eigensolve(omega);
  double threshold = kerTol * hs_norm(omega);
  check_psd(es, kerTol, hs_norm(omega));
  Matrix ker = kernel_basis(es, threshold);
  double bNorm = hs_norm(b);
  if (ker.cols() > 0 && bNorm > 0.0) {
    double overlap = hs_norm(ker.adjoint() * b);
    if (overlap > kerTol * bNorm) {
      std::ostringstream msg;
      msg << "range of b meets ker(omega): overlap " << overlap << " vs |b| " << bNorm;
      throw Error(ErrorKind::KernelOverlap, msg.str());
    }
  }
  return range_power(es, -s, threshold) * b;
}

Matrix sandwich(const Matrix& b, const Matrix& omega, int p, double kerTol) {
  Matrix bBar = b.conjugate();
  return b * range_inverse_power_times(omega.conjugate(), static_cast<double>(p), bBar, kerTol);
}

Matrix expm_hermitian(const Matrix& h, double scale) {
  Solver es = eigensolve(h);
  RealVector e = (scale * es.eigenvalues()).array().exp();
  return es.eigenvectors() * e.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix unitary_from_hermitian(const Matrix& h, double scale) {
  Solver es = eigensolve(h);
  Vector phase(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phase.size(); ++i)
    phase(i) = std::exp(Complex(0.0, -scale * es.eigenvalues()(i)));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace bwflow
