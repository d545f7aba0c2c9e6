#include "bwflow/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bwflow::conditions {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::undetermined: return "undetermined";
  }
  return "?";
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::A1: return "A1";
    case Condition::A2: return "A2";
    case Condition::A3: return "A3";
    case Condition::A4: return "A4";
    case Condition::A5: return "A5";
    case Condition::A6: return "A6";
    case Condition::FB: return "FB";
    case Condition::KM: return "KM";
  }
  return "?";
}

Verdict ConditionReport::verdict(Condition c) const {
  auto it = verdicts.find(c);
  return it == verdicts.end() ? Verdict::undetermined : it->second;
}

void ConditionReport::merge(const ConditionReport& other) {
  for (const auto& [c, v] : other.verdicts) verdicts[c] = v;
  for (const auto& [c, m] : other.margins) margins[c] = m;
  if (other.gapNu) gapNu = other.gapNu;
  if (other.gapNuMinus) gapNuMinus = other.gapNuMinus;
  if (other.rConst) rConst = other.rConst;
  if (other.kernelOverlap) kernelOverlap = other.kernelOverlap;
  if (other.a4Norm) a4Norm = other.a4Norm;
  if (other.a5Norm) a5Norm = other.a5Norm;
  epsExponent = other.epsExponent;
}

namespace {

Verdict from_bool(bool ok) { return ok ? Verdict::holds : Verdict::fails; }

// Relative size of the part of conj(b) living in ker(conj(omega)).
double kernel_overlap(const Matrix& omega, const Matrix& b) {
  double bNorm = hs_norm(b);
  if (bNorm == 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(omega.conjugate()));
  double threshold = kDefaultKerTol * hs_norm(omega);
  Matrix bBar = b.conjugate();
  double overlap2 = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) <= threshold)
      overlap2 += (es.eigenvectors().col(i).adjoint() * bBar).squaredNorm();
  return std::sqrt(overlap2) / bNorm;
}

bool is_real(const QuadraticSpec& spec, double tol) {
  return spec.omega.matrix().imag().cwiseAbs().maxCoeff() <= tol &&
         (spec.b.matrix().size() == 0 || spec.b.matrix().imag().cwiseAbs().maxCoeff() <= tol);
}

}  // namespace

ConditionReport check_a1_a2(const QuadraticSpec& spec, double tol) {
  ConditionReport report;
  const Matrix& omega = spec.omega.matrix();
  double hermDefect = hermitian_defect(omega) / std::max(hs_norm(omega), 1e-300);
  double margin = min_eig_hermitian(omega);
  report.margins[Condition::A1] = margin;
  report.verdicts[Condition::A1] = from_bool(hermDefect <= kDefaultSymTol && margin >= -tol);
  const Matrix& b = spec.b.matrix();
  double symDefect = symmetric_defect(b) / std::max(hs_norm(b), 1e-300);
  report.margins[Condition::A2] = 0.0 - symDefect;
  report.verdicts[Condition::A2] = from_bool(symDefect <= kDefaultSymTol && std::isfinite(hs_norm(b)));
  return report;
}

ConditionReport check_a3_a6(const QuadraticSpec& spec, double tol) {
  ConditionReport report = check_a1_a2(spec, tol);
  ConditionReport out;
  if (!report.holds(Condition::A1) || !report.holds(Condition::A2)) {
    out.verdicts[Condition::A3] = Verdict::undetermined;
    out.verdicts[Condition::A6] = Verdict::undetermined;
    return out;
  }
  const Matrix& omega = spec.omega.matrix();
  const Matrix& b = spec.b.matrix();
  out.kernelOverlap = kernel_overlap(omega, b);
  try {
    Matrix d = omega - 4.0 * sandwich(b, omega, 1);
    double margin = min_eig_hermitian(d);
    out.margins[Condition::A3] = margin;
    out.verdicts[Condition::A3] = from_bool(margin >= -tol);
    double nu = std::max(margin, 0.0);
    out.gapNu = nu;
    out.margins[Condition::A6] = nu;
    out.verdicts[Condition::A6] = from_bool(nu > tol);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::KernelOverlap) throw;
    out.margins[Condition::A3] = -std::numeric_limits<double>::infinity();
    out.verdicts[Condition::A3] = Verdict::fails;
    out.verdicts[Condition::A6] = Verdict::fails;
    out.gapNu = 0.0;
  }
  return out;
}

ConditionReport check_a4_a5(const QuadraticSpec& spec, double epsExponent, double tol) {
  ConditionReport out;
  out.epsExponent = epsExponent;
  ConditionReport pre = check_a3_a6(spec, tol);
  if (!pre.holds(Condition::A3)) {
    out.verdicts[Condition::A4] = Verdict::undetermined;
    out.verdicts[Condition::A5] = Verdict::undetermined;
    return out;
  }
  const Matrix& omega = spec.omega.matrix();
  const Matrix& b = spec.b.matrix();
  try {
    out.a4Norm = hs_norm(range_inverse_power_times(omega, 0.5, b));
    out.verdicts[Condition::A4] = from_bool(std::isfinite(*out.a4Norm));
    out.margins[Condition::A4] = *out.a4Norm;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::KernelOverlap) throw;
    out.verdicts[Condition::A4] = Verdict::undetermined;
    out.verdicts[Condition::A5] = Verdict::undetermined;
    return out;
  }
  try {
    out.a5Norm = hs_norm(range_inverse_power_times(omega, 1.0 + epsExponent, b));
    Matrix second = sandwich(b, omega, 2);
    const auto n = omega.rows();
    double margin = min_eig_hermitian(Matrix::Identity(n, n) - 4.0 * second);
    out.margins[Condition::A5] = margin;
    out.verdicts[Condition::A5] = from_bool(margin > tol && std::isfinite(*out.a5Norm));
    double top = n > 0 ? max_eig_hermitian(second) : 0.0;
    out.rConst = top > 0.0 ? 1.0 / top - 4.0 : std::numeric_limits<double>::infinity();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::KernelOverlap) throw;
    out.verdicts[Condition::A5] = Verdict::undetermined;
  }
  return out;
}

GapCheck check_friedrichs_berezin(const QuadraticSpec& spec, double tol) {
  if (!is_real(spec, tol)) throw Error(ErrorKind::NotReal, "Friedrichs-Berezin check needs a real spec");
  Matrix omega = spec.omega.matrix().real().cast<Complex>();
  Matrix b = spec.b.matrix().real().cast<Complex>();
  double margin = std::min(min_eig_hermitian(omega + 2.0 * b), min_eig_hermitian(omega - 2.0 * b));
  GapCheck out{from_bool(margin >= tol), margin};
  if (out.verdict == Verdict::holds && !check_a3_a6(spec, tol).holds(Condition::A6))
    throw std::logic_error("Friedrichs-Berezin holds but A6 does not");
  return out;
}

KatoMugibayashi check_kato_mugibayashi(const QuadraticSpec& spec, double tol,
                                       const std::optional<Matrix>& projector) {
  if (!is_real(spec, tol)) throw Error(ErrorKind::NotReal, "Kato-Mugibayashi check needs a real spec");
  Matrix omega = spec.omega.matrix().real().cast<Complex>();
  Matrix b = spec.b.matrix().real().cast<Complex>();
  const auto n = omega.rows();
  Matrix minus = omega - 2.0 * b;
  Matrix p;
  if (projector) {
    p = *projector;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(minus));
    double threshold = kDefaultKerTol * std::max(hs_norm(omega), 1e-300);
    p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      if (es.eigenvalues()(i) < threshold) p += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  }
  KatoMugibayashi out;
  out.projectorRank = static_cast<Eigen::Index>(std::llround(p.trace().real()));
  out.gapNuMinus = min_eig_hermitian(omega + 2.0 * b);
  out.gapNuPlus = min_eig_hermitian(minus + p);
  out.verdict = from_bool(out.gapNuMinus > tol && out.gapNuPlus > tol);
  if (out.verdict == Verdict::holds)
    out.gapEquation = min_eig_hermitian(omega - 0.5 * out.gapNuMinus * Matrix::Identity(n, n)) >= -tol;
  return out;
}

ConditionReport check_all(const QuadraticSpec& spec, double epsExponent, double tol) {
  ConditionReport report = check_a1_a2(spec, tol);
  report.merge(check_a3_a6(spec, tol));
  report.merge(check_a4_a5(spec, epsExponent, tol));
  report.epsExponent = epsExponent;
  try {
    GapCheck fb = check_friedrichs_berezin(spec, tol);
    report.verdicts[Condition::FB] = fb.verdict;
    report.margins[Condition::FB] = fb.margin;
    KatoMugibayashi km = check_kato_mugibayashi(spec, tol);
    report.verdicts[Condition::KM] = km.verdict;
    report.margins[Condition::KM] = std::min(km.gapNuMinus, km.gapNuPlus);
    report.gapNuMinus = km.gapNuMinus;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotReal) throw;
    report.verdicts[Condition::FB] = Verdict::undetermined;
    report.verdicts[Condition::KM] = Verdict::undetermined;
  }
  return report;
}

}  // namespace bwflow::conditions
