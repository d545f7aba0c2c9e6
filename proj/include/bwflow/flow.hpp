#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bwflow/ode.hpp"
#include "bwflow/spec.hpp"

namespace bwflow::flow {

// Sign of dC/dt = sign * 8 |B|_HS^2. Normal ordering gives -1; +1 is kept
// for comparison.
inline constexpr double kOracleScalarSign = -1.0;
inline constexpr double kPositiveScalarSign = +1.0;

struct FlowState {
  double t = 0.0;
  Matrix omega;
  Matrix b;
  double c = 0.0;

  static FlowState initial(const QuadraticSpec& spec);
};

struct FlowDerivative {
  Matrix dOmega;
  Matrix dB;
  double dC = 0.0;
};

FlowDerivative rhs(const FlowState& state, double scalarSign = kOracleScalarSign);

enum class Method { rk, split };

struct FlowControls {
  double tol = 1e-10;
  double hMin = 1e-12;
  double hInit = 1e-3;
  double blowupFactor = 1e3;
  // 0 = record every accepted step; > 0 = record on the grid k*sampleInterval only.
  double sampleInterval = 0.0;
  std::size_t maxSamples = 10000;
  Method method = Method::rk;
  double scalarSign = kOracleScalarSign;
  double convTol = 1e-8;
  bool stopOnConvergence = false;
  // Extra times the integrator must land on exactly (and record).
  std::vector<double> stopTimes;
};

struct AlphaBound {
  double alpha = 0.0;
  int nIter = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct FlowDiagnostics {
  double hsB = 0.0;
  double motionResidual = 0.0;
  double kNorm = 0.0;
  double minEigOmega = 0.0;
  std::optional<double> matrixMotionResidual;  // only when K_0 = 0
  double omegaBelowInitial = 0.0;               // min_eig(omega_0 - omega_t)
  double secondOrderGain = 0.0;                 // min_eig((omega^2 - 8 b bbar)_t - (...)_0)
  std::optional<double> conditionConservation;  // min_eig(omega_t - 4 S_t - nu_0)
  std::optional<double> traceSandwich1;         // tr b (omega^T)^-1 bbar
  std::optional<double> traceSandwich2;         // tr b (omega^T)^-2 bbar
  std::vector<AlphaBound> alphaBounds;
};

struct Sample {
  FlowState state;
  FlowDiagnostics diag;
};

enum class EventKind { converged, blowup, stalled };
std::string_view to_string(EventKind kind);

struct FlowEvent {
  EventKind kind = EventKind::converged;
  double t = 0.0;
  double localExistenceBound = 0.0;  // (128 |B_0|)^-1
  std::string detail;
};

struct FlowStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

struct Trajectory {
  QuadraticSpec spec;
  FlowControls controls;
  std::vector<Sample> samples;
  std::vector<FlowEvent> events;
  FlowStats stats;

  const Sample& back() const { return samples.back(); }
  std::optional<FlowEvent> event(EventKind kind) const;
  bool blew_up() const { return event(EventKind::blowup).has_value(); }
};

// Monitors that depend only on (state, spec). Sandwich-based ones are left
// empty when omega_t is not invertible on the range of b_t.
FlowDiagnostics motion_residuals(const FlowState& state, const QuadraticSpec& spec);

std::optional<FlowEvent> blowup_guard(const FlowState& state, const QuadraticSpec& spec,
                                      const FlowControls& controls);

// One Strang step: b advanced exactly under frozen omega for h/2, omega and c
// under frozen b for h, b again for h/2.
FlowState splitting_step(const FlowState& state, double h, double scalarSign = kOracleScalarSign);

// Blow-up is recorded as an event and ends the run; it does not throw.
// StepSizeUnderflow propagates when b is not growing.
Trajectory integrate(const QuadraticSpec& spec, double tEnd, const FlowControls& controls = {});

struct LimitResult {
  Matrix omegaInf;
  double cInf = 0.0;
  bool converged = false;
  double finalHsB = 0.0;
  double traceIdentityResidual = 0.0;
  std::optional<double> commutingLimitResidual;  // vs psd_sqrt(omega_0^2 - 4 b_0 bbar_0) when K_0 = 0
};

// Raises BlowupDetected for a trajectory that blew up.
LimitResult limit_extract(const Trajectory& trajectory, double convTol = 1e-8);

struct DecayFit {
  double rate = 0.0;          // -slope of log|B| against t
  double semilogResidual = 0.0;
  double logLogSlope = 0.0;   // slope of log|B| against log t
  double logLogResidual = 0.0;
  bool exponential = true;
  std::size_t samplesUsed = 0;
};

// Raises InsufficientData with fewer than 10 usable samples in [tBegin, tEnd].
DecayFit decay_fit(const Trajectory& trajectory, double tBegin, double tEnd);

AlphaBound asymptotic_bound_check(const FlowState& state, const QuadraticSpec& spec, double alpha, int nIter,
                                  double tol = 1e-10);

// 4 int_s^t |B|^2 from the c component: (c_t - c_s) / (2 * scalarSign).
double square_integral(const Sample& from, const Sample& to, double scalarSign);

}  // namespace bwflow::flow
