#include "bwflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bwflow::flow {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::converged: return "converged";
    case EventKind::blowup: return "blowup";
    case EventKind::stalled: return "stalled";
  }
  return "?";
}

FlowState FlowState::initial(const QuadraticSpec& spec) {
  return {0.0, spec.omega.matrix(), spec.b.matrix(), spec.c0};
}

std::optional<FlowEvent> Trajectory::event(EventKind kind) const {
  for (const auto& e : events)
    if (e.kind == kind) return e;
  return std::nullopt;
}

FlowDerivative rhs(const FlowState& state, double scalarSign) {
  const Matrix& omega = state.omega;
  const Matrix& b = state.b;
  return {-16.0 * b * b.conjugate(), -2.0 * (omega * b + b * omega.transpose()),
          scalarSign * 8.0 * b.squaredNorm()};
}

namespace {

// Packed layout: omega (column major), b, then c in the last slot.
Vector pack(const FlowState& s) {
  const auto nn = s.omega.size();
  Vector y(2 * nn + 1);
  y.head(nn) = s.omega.reshaped();
  y.segment(nn, nn) = s.b.reshaped();
  y(2 * nn) = s.c;
  return y;
}

FlowState unpack(const Vector& y, Eigen::Index n, double t) {
  const auto nn = n * n;
  FlowState s;
  s.t = t;
  s.omega = y.head(nn).reshaped(n, n);
  s.b = y.segment(nn, nn).reshaped(n, n);
  s.c = y(2 * nn).real();
  return s;
}

// Error per block: omega and c against their own size, b against |b| so a
// decaying b keeps relative accuracy; below 1e-12 (1 + |omega|) it goes absolute.
double error_ratio(const Vector& err, const Vector& y, const Vector& yNew, double tol) {
  const auto nn = (y.size() - 1) / 2;
  auto size = [&](Eigen::Index at, Eigen::Index len) {
    return std::max(y.segment(at, len).norm(), yNew.segment(at, len).norm());
  };
  double omegaSize = size(0, nn);
  double bFloor = 1e-12 * (1.0 + omegaSize);
  double rOmega = err.head(nn).norm() / (tol * (1.0 + omegaSize));
  double rB = err.segment(nn, nn).norm() / (tol * (bFloor + size(nn, nn)));
  double rC = std::abs(err(2 * nn)) / (tol * (1.0 + size(2 * nn, 1)));
  return std::max({rOmega, rB, rC});
}

void project(FlowState& s) {
  s.omega = hermitize(s.omega);
  s.b = symmetrize(s.b);
}

// Quantities of the initial state reused by every monitor call.
struct Reference {
  Matrix omega0;
  Matrix b0;
  double hsB0 = 0.0;
  double motionTrace0 = 0.0;
  Matrix motion0;      // omega0^2 - 4 b0 bbar0
  Matrix secondOrder0; // omega0^2 - 8 b0 bbar0
  bool commuting = false;
  std::optional<double> nu0;  // A3 slack at t = 0 when A3 holds

  explicit Reference(const QuadraticSpec& spec)
      : omega0(spec.omega.matrix()), b0(spec.b.matrix()), hsB0(hs_norm(b0)) {
    Matrix bb = b0 * b0.conjugate();
    Matrix sq = omega0 * omega0;
    motion0 = sq - 4.0 * bb;
    secondOrder0 = sq - 8.0 * bb;
    motionTrace0 = motion0.trace().real();
    double k0 = hs_norm(omega0 * b0 - b0 * omega0.transpose());
    commuting = k0 <= 1e-12 * std::max(1.0, hs_norm(omega0) * hsB0);
    try {
      double margin = min_eig_hermitian(omega0 - 4.0 * sandwich(b0, omega0, 1));
      if (margin >= -1e-10) nu0 = std::max(margin, 0.0);
    } catch (const Error&) {
    }
  }
};

FlowDiagnostics diagnose(const FlowState& s, const Reference& ref) {
  FlowDiagnostics d;
  Matrix bb = s.b * s.b.conjugate();
  Matrix sq = s.omega * s.omega;
  d.hsB = hs_norm(s.b);
  Matrix motion = sq - 4.0 * bb;
  d.motionResidual = std::abs(motion.trace().real() - ref.motionTrace0);
  d.kNorm = hs_norm(s.omega * s.b - s.b * s.omega.transpose());
  if (ref.commuting) d.matrixMotionResidual = hs_norm(motion - ref.motion0);
  d.minEigOmega = min_eig_hermitian(s.omega);
  d.omegaBelowInitial = min_eig_hermitian(ref.omega0 - s.omega);
  d.secondOrderGain = min_eig_hermitian((sq - 8.0 * bb) - ref.secondOrder0);
  try {
    Matrix first = sandwich(s.b, s.omega, 1);
    d.traceSandwich1 = first.trace().real();
    d.traceSandwich2 = sandwich(s.b, s.omega, 2).trace().real();
    if (ref.nu0) {
      const auto n = s.omega.rows();
      d.conditionConservation =
          min_eig_hermitian(s.omega - 4.0 * first - *ref.nu0 * Matrix::Identity(n, n));
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::KernelOverlap && e.kind() != ErrorKind::NotPSD) throw;
  }
  return d;
}

double local_existence_bound(double hsB0) {
  return hsB0 > 0.0 ? 1.0 / (128.0 * hsB0) : std::numeric_limits<double>::infinity();
}

FlowEvent make_blowup(const FlowState& s, double hsB0, const std::string& why) {
  std::ostringstream msg;
  msg << why << "; |B_t| = " << hs_norm(s.b) << " at t = " << s.t;
  return {EventKind::blowup, s.t, local_existence_bound(hsB0), msg.str()};
}

std::vector<double> stop_grid(double tEnd, const FlowControls& controls) {
  std::vector<double> stops = controls.stopTimes;
  if (controls.sampleInterval > 0.0) {
    auto count = static_cast<long long>(std::floor(tEnd / controls.sampleInterval + 1e-9));
    for (long long k = 1; k <= count; ++k) stops.push_back(static_cast<double>(k) * controls.sampleInterval);
  }
  std::erase_if(stops, [&](double s) { return !(s > 0.0 && s <= tEnd); });
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              stops.end());
  return stops;
}

// Strang splitting with step doubling for error control; same contract as
// dormand_prince but on FlowState.
template <class Observer>
OdeStats split_adaptive(FlowState& state, double tEnd, const OdeOptions& opt, const std::vector<double>& stops,
                        double scalarSign, Observer&& observer) {
  OdeStats stats;
  double h = opt.hInit;
  auto nextStop = stops.begin();
  while (state.t < tEnd) {
    while (nextStop != stops.end() && *nextStop <= state.t) ++nextStop;
    double target = tEnd;
    if (nextStop != stops.end() && *nextStop < target) target = *nextStop;
    bool clipped = false;
    double step = h;
    if (state.t + step >= target) {
      step = target - state.t;
      clipped = true;
    }
    FlowState coarse = splitting_step(state, step, scalarSign);
    FlowState fine = splitting_step(splitting_step(state, 0.5 * step, scalarSign), 0.5 * step, scalarSign);
    stats.evaluations += 3;
    Vector yFine = pack(fine);
    double ratio = error_ratio((yFine - pack(coarse)) / 3.0, pack(state), yFine, opt.tol);
    if (!std::isfinite(ratio) || ratio > 1.0) {
      ++stats.rejected;
      h = step * (std::isfinite(ratio) ? std::max(0.2, 0.9 * std::cbrt(1.0 / ratio)) : 0.2);
      if (h < opt.hMin) {
        std::ostringstream msg;
        msg << "step " << h << " below hMin " << opt.hMin << " at t=" << state.t;
        throw Error(ErrorKind::StepSizeUnderflow, msg.str());
      }
      continue;
    }
    ++stats.accepted;
    stats.lastStep = step;
    fine.t = clipped ? target : state.t + step;
    state = std::move(fine);
    double proposal = step * (ratio > 0.0 ? std::min(4.0, 0.9 * std::cbrt(1.0 / ratio)) : 4.0);
    h = clipped ? std::max(h, proposal) : proposal;
    if (!observer(state)) break;
  }
  return stats;
}

void thin(std::vector<Sample>& samples, std::size_t maxSamples, const std::vector<double>& keep) {
  if (maxSamples < 2 || samples.size() <= maxSamples) return;
  std::size_t stride = (samples.size() + maxSamples - 1) / maxSamples;
  std::vector<Sample> kept;
  kept.reserve(maxSamples + keep.size() + 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double t = samples[i].state.t;
    bool pinned = std::any_of(keep.begin(), keep.end(), [&](double s) { return std::abs(s - t) < 1e-12; });
    if (i % stride == 0 || i + 1 == samples.size() || pinned) kept.push_back(std::move(samples[i]));
  }
  samples = std::move(kept);
}

}  // namespace

FlowDiagnostics motion_residuals(const FlowState& state, const QuadraticSpec& spec) {
  return diagnose(state, Reference(spec));
}

std::optional<FlowEvent> blowup_guard(const FlowState& state, const QuadraticSpec& spec,
                                      const FlowControls& controls) {
  double hsB0 = hs_norm(spec.b.matrix());
  double hsB = hs_norm(state.b);
  if (!std::isfinite(hsB) || (hsB0 > 0.0 && hsB > controls.blowupFactor * hsB0))
    return make_blowup(state, hsB0, "|B_t| exceeded blowupFactor * |B_0|");
  return std::nullopt;
}

FlowState splitting_step(const FlowState& state, double h, double scalarSign) {
  FlowState next = state;
  Matrix half = expm_hermitian(state.omega, -h);
  Matrix bMid = half * state.b * half.transpose();
  next.omega = hermitize(state.omega - 16.0 * h * bMid * bMid.conjugate());
  next.c = state.c + scalarSign * 8.0 * h * bMid.squaredNorm();
  Matrix half2 = expm_hermitian(next.omega, -h);
  next.b = symmetrize(half2 * bMid * half2.transpose());
  next.t = state.t + h;
  return next;
}

Trajectory integrate(const QuadraticSpec& spec, double tEnd, const FlowControls& controls) {
  if (!(tEnd >= 0.0)) throw Error(ErrorKind::OutOfRange, "tEnd must be nonnegative");
  Trajectory traj{spec, controls, {}, {}, {}};
  const Reference ref(spec);
  const auto n = spec.dim();
  const std::vector<double> stops = stop_grid(tEnd, controls);
  const std::vector<double> pinned = controls.stopTimes;
  const bool everyStep = controls.sampleInterval <= 0.0;
  auto isStop = [&](double t) {
    return std::any_of(stops.begin(), stops.end(), [&](double s) { return std::abs(s - t) < 1e-12; });
  };
  auto isPinned = [&](double t) {
    return std::any_of(pinned.begin(), pinned.end(), [&](double s) { return std::abs(s - t) < 1e-12; });
  };

  FlowState state = FlowState::initial(spec);
  auto record = [&](const FlowState& s) {
    Sample sample{s, diagnose(s, ref)};
    if (isPinned(s.t)) {
      for (double alpha : {0.5, 1.0})
        for (int nIter = 1; nIter <= 4; ++nIter)
          sample.diag.alphaBounds.push_back(asymptotic_bound_check(s, spec, alpha, nIter));
    }
    traj.samples.push_back(std::move(sample));
  };
  record(state);

  bool converged = false;
  double previousHsB = ref.hsB0;
  auto noteConvergence = [&](const FlowState& s, double hsB) {
    if (!converged && hsB < controls.convTol) {
      converged = true;
      std::ostringstream msg;
      msg << "|B_t| = " << hsB << " < " << controls.convTol;
      traj.events.push_back({EventKind::converged, s.t, local_existence_bound(ref.hsB0), msg.str()});
    }
  };
  noteConvergence(state, ref.hsB0);
  if (converged && controls.stopOnConvergence) return traj;

  auto onStep = [&](FlowState& s) {
    project(s);
    double hsB = hs_norm(s.b);
    bool last = s.t >= tEnd;
    if (auto blow = blowup_guard(s, spec, controls)) {
      traj.events.push_back(*blow);
      record(s);
      return false;
    }
    if (everyStep || last || isStop(s.t)) record(s);
    noteConvergence(s, hsB);
    previousHsB = hsB;
    state = s;
    return !(converged && controls.stopOnConvergence);
  };

  OdeOptions opt;
  opt.tol = controls.tol;
  opt.hInit = controls.hInit;
  opt.hMin = controls.hMin;
  opt.errorRatio = [tol = controls.tol](const Vector& err, const Vector& y, const Vector& yNew) {
    return error_ratio(err, y, yNew, tol);
  };
  OdeStats stats;
  try {
    if (controls.method == Method::rk) {
      Vector y = pack(state);
      double t = 0.0;
      auto f = [&](double, const Vector& yy) {
        FlowState s = unpack(yy, n, 0.0);
        FlowDerivative d = rhs(s, controls.scalarSign);
        return pack({0.0, d.dOmega, d.dB, d.dC});
      };
      auto observer = [&](double tt, Vector& yy) {
        FlowState s = unpack(yy, n, tt);
        bool go = onStep(s);
        yy = pack(s);
        return go;
      };
      stats = dormand_prince(f, y, t, tEnd, opt, stops, observer);
    } else {
      FlowState s = state;
      stats = split_adaptive(s, tEnd, opt, stops, controls.scalarSign, onStep);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::StepSizeUnderflow) throw;
    if (!(hs_norm(state.b) >= previousHsB && hs_norm(state.b) > ref.hsB0)) throw;
    traj.events.push_back(make_blowup(state, ref.hsB0, "step size underflow while |B_t| grows"));
    if (traj.samples.back().state.t != state.t) record(state);
  }
  traj.stats = {stats.accepted, stats.rejected, stats.evaluations};

  if (!traj.blew_up() && !converged) {
    std::ostringstream msg;
    msg << "|B_t| = " << hs_norm(traj.samples.back().state.b) << " at t = " << traj.samples.back().state.t;
    traj.events.push_back({EventKind::stalled, traj.samples.back().state.t, local_existence_bound(ref.hsB0),
                           msg.str()});
  }
  thin(traj.samples, controls.maxSamples, pinned);
  return traj;
}

LimitResult limit_extract(const Trajectory& trajectory, double convTol) {
  if (auto blow = trajectory.event(EventKind::blowup))
    throw Error(ErrorKind::BlowupDetected, blow->detail);
  const QuadraticSpec& spec = trajectory.spec;
  const FlowState& last = trajectory.back().state;
  LimitResult out;
  out.omegaInf = last.omega;
  out.cInf = last.c;
  out.finalHsB = hs_norm(last.b);
  out.converged = out.finalHsB < convTol;
  const Matrix& omega0 = spec.omega.matrix();
  const Matrix& b0 = spec.b.matrix();
  out.traceIdentityResidual = std::abs(2.0 * (out.cInf - spec.c0) -
                                       trajectory.controls.scalarSign * (omega0 - out.omegaInf).trace().real());
  double k0 = hs_norm(omega0 * b0 - b0 * omega0.transpose());
  if (k0 <= 1e-12 * std::max(1.0, hs_norm(omega0) * hs_norm(b0))) {
    try {
      Matrix expected = psd_sqrt(omega0 * omega0 - 4.0 * b0 * b0.conjugate());
      out.commutingLimitResidual = hs_norm(out.omegaInf - expected);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotPSD) throw;
    }
  }
  return out;
}

DecayFit decay_fit(const Trajectory& trajectory, double tBegin, double tEnd) {
  std::vector<double> ts, logs;
  for (const auto& s : trajectory.samples) {
    double t = s.state.t;
    if (t < tBegin - 1e-12 || t > tEnd + 1e-12 || !(s.diag.hsB > 0.0)) continue;
    ts.push_back(t);
    logs.push_back(std::log(s.diag.hsB));
  }
  if (ts.size() < 10) {
    std::ostringstream msg;
    msg << ts.size() << " usable samples in [" << tBegin << ", " << tEnd << "], need 10";
    throw Error(ErrorKind::InsufficientData, msg.str());
  }
  auto fit = [&](const std::vector<double>& x) {
    const auto m = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design(m, 2);
    Eigen::VectorXd target(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      design(i, 0) = 1.0;
      design(i, 1) = x[static_cast<std::size_t>(i)];
      target(i) = logs[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    double rms = std::sqrt((design * coef - target).squaredNorm() / static_cast<double>(m));
    return std::pair{coef(1), rms};
  };
  DecayFit out;
  out.samplesUsed = ts.size();
  auto [slope, residual] = fit(ts);
  out.rate = -slope;
  out.semilogResidual = residual;
  if (ts.front() > 0.0) {
    std::vector<double> logT(ts.size());
    std::transform(ts.begin(), ts.end(), logT.begin(), [](double t) { return std::log(t); });
    auto [llSlope, llResidual] = fit(logT);
    out.logLogSlope = llSlope;
    out.logLogResidual = llResidual;
    out.exponential = residual <= llResidual;
  }
  return out;
}

AlphaBound asymptotic_bound_check(const FlowState& state, const QuadraticSpec& spec, double alpha, int nIter,
                                  double tol) {
  AlphaBound out{alpha, nIter, 0.0, 0.0, false};
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(state.omega));
  double threshold = kDefaultKerTol * hs_norm(state.omega);
  RealVector powered(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < powered.size(); ++i) {
    double lambda = es.eigenvalues()(i);
    powered(i) = lambda <= threshold ? 0.0 : std::pow(lambda, alpha);
  }
  Matrix omegaPower = es.eigenvectors() * powered.asDiagonal() * es.eigenvectors().adjoint();
  out.lhs = hs_norm(omegaPower * state.b);
  double share = std::ldexp(1.0, -nIter);
  double prefactor = std::pow(std::ldexp(1.0, nIter - 1) * alpha / (std::numbers::e * state.t), alpha);
  out.rhs = prefactor * std::pow(hs_norm(spec.b.matrix()), share) * std::pow(hs_norm(state.b), 1.0 - share);
  out.holds = out.lhs <= out.rhs * (1.0 + tol);
  return out;
}

double square_integral(const Sample& from, const Sample& to, double scalarSign) {
  return (to.state.c - from.state.c) / (2.0 * scalarSign);
}

}  // namespace bwflow::flow
