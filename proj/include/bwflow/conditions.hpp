#pragma once

#include <map>
#include <optional>
#include <string_view>

#include "bwflow/spec.hpp"

namespace bwflow::conditions {

enum class Verdict { holds, fails, undetermined };
enum class Condition { A1, A2, A3, A4, A5, A6, FB, KM };

std::string_view to_string(Verdict v);
std::string_view to_string(Condition c);

inline constexpr double kDefaultTol = 1e-10;
inline constexpr double kDefaultEps = 0.5;

struct ConditionReport {
  std::map<Condition, Verdict> verdicts;
  std::map<Condition, double> margins;
  std::optional<double> gapNu;
  std::optional<double> gapNuMinus;
  std::optional<double> rConst;  // +inf when the second sandwich vanishes
  double epsExponent = kDefaultEps;
  // A3 boundary: the kernel-overlap size and the inequality margin are both
  // kept, since at margin 0 the verdict is a tolerance call.
  std::optional<double> kernelOverlap;
  std::optional<double> a4Norm;  // |omega^{-1/2} b|_HS
  std::optional<double> a5Norm;  // |omega^{-1-eps} b|_HS

  Verdict verdict(Condition c) const;
  bool holds(Condition c) const { return verdict(c) == Verdict::holds; }
  void merge(const ConditionReport& other);
};

ConditionReport check_a1_a2(const QuadraticSpec& spec, double tol = kDefaultTol);
ConditionReport check_a3_a6(const QuadraticSpec& spec, double tol = kDefaultTol);
ConditionReport check_a4_a5(const QuadraticSpec& spec, double epsExponent = kDefaultEps,
                            double tol = kDefaultTol);

struct GapCheck {
  Verdict verdict = Verdict::undetermined;
  double margin = 0.0;
};

// Raises NotReal for specs with imaginary parts above tol.
GapCheck check_friedrichs_berezin(const QuadraticSpec& spec, double tol = kDefaultTol);

struct KatoMugibayashi {
  Verdict verdict = Verdict::undetermined;
  double gapNuMinus = 0.0;
  double gapNuPlus = 0.0;
  Eigen::Index projectorRank = 0;
  // omega >= (gapNuMinus / 2) * 1, evaluated when the verdict holds.
  bool gapEquation = false;
};

// projector: orthogonal projector onto {omega = 2b}; auto-detected when absent.
KatoMugibayashi check_kato_mugibayashi(const QuadraticSpec& spec, double tol = kDefaultTol,
                                       const std::optional<Matrix>& projector = std::nullopt);

// Everything above; FB and KM are left undetermined for complex specs.
ConditionReport check_all(const QuadraticSpec& spec, double epsExponent = kDefaultEps,
                          double tol = kDefaultTol);

}  // namespace bwflow::conditions
