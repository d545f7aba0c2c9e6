#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "bwflow/opcore.hpp"

namespace bwflow {

struct OdeOptions {
  double tol = 1e-10;  // per-step error <= tol * (1 + |y|)
  double hInit = 1e-3;
  double hMin = 1e-12;
  double hMax = std::numeric_limits<double>::infinity();
  // Optional (err, y, yNew) -> error / allowed error; accept when <= 1.
  std::function<double(const Vector&, const Vector&, const Vector&)> errorRatio;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
  double lastStep = 0.0;
};

// Dormand-Prince 5(4) on a complex state vector.
//   f(t, y) returns dy/dt.
//   observer(t, y) runs after every accepted step; it may project y in place
//   and returns false to stop early.
// Steps are clipped so that every time in `stops` (ascending) is hit exactly.
template <class Rhs, class Observer>
OdeStats dormand_prince(Rhs&& f, Vector& y, double& t, double tEnd, const OdeOptions& opt,
                        const std::vector<double>& stops, Observer&& observer) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeStats stats;
  double h = std::min(opt.hInit, opt.hMax);
  auto nextStop = std::upper_bound(stops.begin(), stops.end(), t);

  while (t < tEnd) {
    double target = tEnd;
    while (nextStop != stops.end() && *nextStop <= t) ++nextStop;
    if (nextStop != stops.end() && *nextStop < target) target = *nextStop;

    bool clipped = false;
    double step = h;
    if (t + step >= target) {
      step = target - t;
      clipped = true;
    }

    Vector k1 = f(t, y);
    Vector k2 = f(t + c2 * step, y + step * (a21 * k1));
    Vector k3 = f(t + c3 * step, y + step * (a31 * k1 + a32 * k2));
    Vector k4 = f(t + c4 * step, y + step * (a41 * k1 + a42 * k2 + a43 * k3));
    Vector k5 = f(t + c5 * step, y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Vector k6 = f(t + step, y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vector yNew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    Vector k7 = f(t + step, yNew);
    stats.evaluations += 7;

    Vector err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double ratio = opt.errorRatio ? opt.errorRatio(err, y, yNew)
                                  : err.norm() / (opt.tol * (1.0 + std::max(y.norm(), yNew.norm())));

    if (!std::isfinite(ratio) || ratio > 1.0) {
      ++stats.rejected;
      double shrink = std::isfinite(ratio) ? std::max(0.2, 0.9 * std::pow(ratio, -0.2)) : 0.2;
      h = step * shrink;
      if (h < opt.hMin) {
        std::ostringstream msg;
        msg << "step " << h << " below hMin " << opt.hMin << " at t=" << t;
        throw Error(ErrorKind::StepSizeUnderflow, msg.str());
      }
      continue;
    }

    ++stats.accepted;
    stats.lastStep = step;
    t = clipped ? target : t + step;
    y = std::move(yNew);
    double grow = ratio > 0.0 ? std::min(5.0, 0.9 * std::pow(ratio, -0.2)) : 5.0;
    double proposal = std::min(step * grow, opt.hMax);
    // A step shortened only to land on a stop says nothing about the
    // natural step size, so keep the old one unless the error asks for less.
    h = clipped ? std::min(std::max(h, proposal), opt.hMax) : proposal;
    if (!observer(t, y)) break;
  }
  return stats;
}

}  // namespace bwflow
