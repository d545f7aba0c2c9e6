#pragma once

#include <functional>
#include <vector>

#include "bwflow/flow.hpp"

namespace bwflow::bogoliubov {

inline constexpr double kMapTol = 1e-7;
inline constexpr double kDecompTol = 1e-7;

// a -> u a + v a^*  (plus shift, always zero along the flow).
struct BogoliubovMap {
  Matrix u;
  Matrix v;
  Vector shift;
  double s = 0.0;
  double t = 0.0;

  static BogoliubovMap identity(Eigen::Index n, double at = 0.0);
  Eigen::Index dim() const noexcept { return u.rows(); }
};

// Time-indexed access to B_t.
class BPath {
 public:
  virtual ~BPath() = default;
  virtual Matrix at(double t) const = 0;
  virtual double begin() const = 0;
  virtual double end() const = 0;
  // Break points the integrators should land on; empty if smooth.
  virtual std::vector<double> knots() const { return {}; }
  void require_covers(double s, double t) const;
};

// Piecewise cubic Hermite interpolation of the trajectory samples, using
// the flow right-hand side for the slopes.
class TrajectoryPath final : public BPath {
 public:
  explicit TrajectoryPath(const flow::Trajectory& trajectory);
  Matrix at(double t) const override;
  double begin() const override { return times_.front(); }
  double end() const override { return times_.back(); }
  std::vector<double> knots() const override { return times_; }

 private:
  std::vector<double> times_;
  std::vector<Matrix> values_;
  std::vector<Matrix> slopes_;
};

class FunctionPath final : public BPath {
 public:
  FunctionPath(std::function<Matrix(double)> f, double begin, double end)
      : f_(std::move(f)), begin_(begin), end_(end) {}
  Matrix at(double t) const override;
  double begin() const override { return begin_; }
  double end() const override { return end_; }

 private:
  std::function<Matrix(double)> f_;
  double begin_;
  double end_;
};

// du/dt = -4 v conj(B_t), dv/dt = -4 u B_t, from (1, 0) at s.
BogoliubovMap integrate_uv(const BPath& path, double s, double t, double tol = 1e-10);

// Flow and (u, v) advanced together in one state vector.
struct CoIntegrated {
  flow::FlowState state;
  BogoliubovMap map;
};
CoIntegrated co_integrate(const QuadraticSpec& spec, double tEnd, const flow::FlowControls& controls = {});

struct DysonResult {
  BogoliubovMap map;
  double integralB = 0.0;  // int_s^t |B|_HS
  double tailBoundU = 0.0;
  double tailBoundV = 0.0;
};

// Iterated-integral series through `order`; integrals use Gauss-Legendre
// panels with spectral integration inside each panel.
DysonResult dyson_uv(const BPath& path, double s, double t, int order, int panels = 64);

// int_s^t |B_tau|_HS d tau by composite Gauss-Legendre.
double integrate_hs_norm(const BPath& path, double s, double t, int panels = 64);

struct SymplecticResiduals {
  double uuStar = 0.0;  // |u u^* - v v^* - 1|
  double uStarU = 0.0;  // |u^* u - v^T conj(v) - 1|
  double uvT = 0.0;     // |u v^T - v u^T|
  double uStarV = 0.0;  // |u^* v - v^T conj(u)|
  double max() const;
};
SymplecticResiduals symplectic_residuals(const BogoliubovMap& map);

struct NormBounds {
  double uLhs = 0.0, uRhs = 0.0;  // 1 + |u - 1| <= cosh(4 intB)
  double vLhs = 0.0, vRhs = 0.0;  // |v| <= sinh(4 intB)
  bool uHolds = false;
  bool vHolds = false;
};
NormBounds norm_bounds(const BogoliubovMap& map, double intB);

// Coefficients of U H U^* where U a U^* = u a + v a^*.
QuadraticSpec transform_spec(const BogoliubovMap& map, const QuadraticSpec& spec, double mapTol = kMapTol);

BogoliubovMap inverse(const BogoliubovMap& map);
// Map over [s, t] from maps over [s, x] (first) and [x, t] (second).
BogoliubovMap compose(const BogoliubovMap& first, const BogoliubovMap& second);

struct GeneratorDecomposition {
  Matrix hMatrix;          // hermitian, residual unitary = exp(i h)
  RealVector alphas;       // squeezing parameters, descending
  Matrix gBasis;           // columns g_k
  Matrix hBasis;           // columns h_k
  Vector shift;
  double reconstructionResidual = 0.0;
};

// u = sum cosh(a_k) g_k h_k^*, v = sum sinh(a_k) g_k h_k^T, and
// exp(i hMatrix) = sum h_k g_k^*.
GeneratorDecomposition decompose_generator(const BogoliubovMap& map, double decompTol = kDecompTol);
BogoliubovMap rebuild(const GeneratorDecomposition& d);

}  // namespace bwflow::bogoliubov
