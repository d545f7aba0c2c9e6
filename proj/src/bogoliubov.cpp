#include "bwflow/bogoliubov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace bwflow::bogoliubov {

BogoliubovMap BogoliubovMap::identity(Eigen::Index n, double at) {
  return {Matrix::Identity(n, n), Matrix::Zero(n, n), Vector::Zero(n), at, at};
}

void BPath::require_covers(double s, double t) const {
  double slack = 1e-12 * std::max(1.0, std::abs(end()));
  if (s < begin() - slack || t > end() + slack || s > t) {
    std::ostringstream msg;
    msg << "[" << s << ", " << t << "] not inside path coverage [" << begin() << ", " << end() << "]";
    throw Error(ErrorKind::PathGap, msg.str());
  }
}

TrajectoryPath::TrajectoryPath(const flow::Trajectory& trajectory) {
  for (const auto& sample : trajectory.samples) {
    if (!times_.empty() && sample.state.t <= times_.back()) continue;
    times_.push_back(sample.state.t);
    values_.push_back(sample.state.b);
    slopes_.push_back(flow::rhs(sample.state, trajectory.controls.scalarSign).dB);
  }
  if (times_.empty()) throw Error(ErrorKind::PathGap, "empty trajectory");
}

Matrix TrajectoryPath::at(double t) const {
  require_covers(t, t);
  if (times_.size() == 1 || t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  auto hi = static_cast<std::size_t>(it - times_.begin());
  std::size_t lo = hi - 1;
  double h = times_[hi] - times_[lo];
  double x = (t - times_[lo]) / h;
  double x2 = x * x, x3 = x2 * x;
  double h00 = 2 * x3 - 3 * x2 + 1, h10 = x3 - 2 * x2 + x, h01 = -2 * x3 + 3 * x2, h11 = x3 - x2;
  return h00 * values_[lo] + (h10 * h) * slopes_[lo] + h01 * values_[hi] + (h11 * h) * slopes_[hi];
}

Matrix FunctionPath::at(double t) const {
  require_covers(t, t);
  return f_(t);
}

namespace {

struct GaussRule {
  RealVector nodes;    // on [-1, 1], ascending
  RealVector weights;
  Eigen::MatrixXd integration;  // (S f)_i = int_{-1}^{x_i} of the interpolant of f
};

double legendre(int m, double x) {
  double p0 = 1.0, p1 = x;
  if (m == 0) return p0;
  for (int k = 1; k < m; ++k) {
    double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

GaussRule make_rule(int q) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(q, q);
  for (int k = 1; k < q; ++k) {
    double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = 2.0 * es.eigenvectors().row(0).array().square().transpose();
  rule.integration = Eigen::MatrixXd::Zero(q, q);
  // Lagrange basis in Legendre coefficients, integrated term by term.
  for (int j = 0; j < q; ++j) {
    for (int m = 0; m < q; ++m) {
      double coef = rule.weights(j) * legendre(m, rule.nodes(j)) * (2 * m + 1) / 2.0;
      for (int i = 0; i < q; ++i) {
        double x = rule.nodes(i);
        double integral = m == 0 ? x + 1.0 : (legendre(m + 1, x) - legendre(m - 1, x)) / (2 * m + 1);
        rule.integration(i, j) += coef * integral;
      }
    }
  }
  return rule;
}

const GaussRule& rule10() {
  static const GaussRule rule = make_rule(10);
  return rule;
}

std::vector<double> panel_breaks(const BPath& path, double s, double t, int panels) {
  std::vector<double> breaks{s};
  std::vector<double> knots = path.knots();
  if (!knots.empty()) {
    for (double k : knots)
      if (k > s + 1e-14 && k < t - 1e-14) breaks.push_back(k);
  } else {
    for (int p = 1; p < panels; ++p) breaks.push_back(s + (t - s) * p / panels);
  }
  breaks.push_back(t);
  return breaks;
}

Vector pack2(const Matrix& a, const Matrix& b) {
  Vector y(a.size() + b.size());
  y.head(a.size()) = a.reshaped();
  y.tail(b.size()) = b.reshaped();
  return y;
}

}  // namespace

BogoliubovMap integrate_uv(const BPath& path, double s, double t, double tol) {
  path.require_covers(s, t);
  const auto n = path.at(s).rows();
  const auto nn = n * n;
  BogoliubovMap map = BogoliubovMap::identity(n, s);
  map.t = t;
  if (t == s) return map;
  Vector y = pack2(map.u, map.v);
  auto f = [&](double tau, const Vector& yy) {
    Matrix b = path.at(std::min(tau, t));
    Matrix u = yy.head(nn).reshaped(n, n);
    Matrix v = yy.tail(nn).reshaped(n, n);
    return pack2(-4.0 * v * b.conjugate(), -4.0 * u * b);
  };
  std::vector<double> stops;
  for (double k : path.knots())
    if (k > s && k < t) stops.push_back(k);
  double tau = s;
  OdeOptions opt;
  opt.tol = tol;
  opt.hInit = std::min(1e-3, t - s);
  opt.hMin = 1e-14;
  dormand_prince(f, y, tau, t, opt, stops, [](double, Vector&) { return true; });
  map.u = y.head(nn).reshaped(n, n);
  map.v = y.tail(nn).reshaped(n, n);
  return map;
}

CoIntegrated co_integrate(const QuadraticSpec& spec, double tEnd, const flow::FlowControls& controls) {
  const auto n = spec.dim();
  const auto nn = n * n;
  auto pack = [&](const flow::FlowState& s, const Matrix& u, const Matrix& v) {
    Vector y(4 * nn + 1);
    y << s.omega.reshaped(), s.b.reshaped(), u.reshaped(), v.reshaped(), Complex(s.c);
    return y;
  };
  flow::FlowState state = flow::FlowState::initial(spec);
  Vector y = pack(state, Matrix::Identity(n, n), Matrix::Zero(n, n));
  auto f = [&](double, const Vector& yy) {
    flow::FlowState s{0.0, yy.segment(0, nn).reshaped(n, n), yy.segment(nn, nn).reshaped(n, n), 0.0};
    Matrix u = yy.segment(2 * nn, nn).reshaped(n, n);
    Matrix v = yy.segment(3 * nn, nn).reshaped(n, n);
    flow::FlowDerivative d = flow::rhs(s, controls.scalarSign);
    Vector dy(4 * nn + 1);
    dy << d.dOmega.reshaped(), d.dB.reshaped(), (-4.0 * v * s.b.conjugate()).reshaped(), (-4.0 * u * s.b).reshaped(),
        Complex(d.dC);
    return dy;
  };
  auto observer = [&](double, Vector& yy) {
    yy.segment(0, nn) = hermitize(yy.segment(0, nn).reshaped(n, n)).reshaped();
    yy.segment(nn, nn) = symmetrize(yy.segment(nn, nn).reshaped(n, n)).reshaped();
    yy(4 * nn) = yy(4 * nn).real();
    return true;
  };
  double t = 0.0;
  OdeOptions opt;
  opt.tol = controls.tol;
  opt.hInit = controls.hInit;
  opt.hMin = controls.hMin;
  dormand_prince(f, y, t, tEnd, opt, {}, observer);
  CoIntegrated out;
  out.state = {t, y.segment(0, nn).reshaped(n, n), y.segment(nn, nn).reshaped(n, n), y(4 * nn).real()};
  out.map = {y.segment(2 * nn, nn).reshaped(n, n), y.segment(3 * nn, nn).reshaped(n, n), Vector::Zero(n), 0.0, t};
  return out;
}

double integrate_hs_norm(const BPath& path, double s, double t, int panels) {
  path.require_covers(s, t);
  if (t == s) return 0.0;
  const GaussRule& rule = rule10();
  std::vector<double> breaks = panel_breaks(path, s, t, panels);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    double a = breaks[p], b = breaks[p + 1];
    double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
      total += half * rule.weights(i) * hs_norm(path.at(mid + half * rule.nodes(i)));
  }
  return total;
}

DysonResult dyson_uv(const BPath& path, double s, double t, int order, int panels) {
  if (order < 1) throw Error(ErrorKind::OutOfRange, "Dyson order must be >= 1");
  path.require_covers(s, t);
  const auto n = path.at(s).rows();
  DysonResult out;
  out.map = BogoliubovMap::identity(n, s);
  out.map.t = t;
  out.integralB = integrate_hs_norm(path, s, t, panels);
  if (t > s) {
    const GaussRule& rule = rule10();
    const auto q = rule.nodes.size();
    std::vector<double> breaks = panel_breaks(path, s, t, panels);
    const std::size_t np = breaks.size() - 1;
    // B and conj(B) at every node of every panel.
    std::vector<Matrix> bNodes(np * static_cast<std::size_t>(q));
    for (std::size_t p = 0; p < np; ++p) {
      double half = 0.5 * (breaks[p + 1] - breaks[p]), mid = 0.5 * (breaks[p + 1] + breaks[p]);
      for (Eigen::Index i = 0; i < q; ++i)
        bNodes[p * static_cast<std::size_t>(q) + static_cast<std::size_t>(i)] = path.at(mid + half * rule.nodes(i));
    }
    // term values at nodes; term 0 is the identity
    std::vector<Matrix> term(bNodes.size(), Matrix::Identity(n, n));
    for (int k = 1; k <= order; ++k) {
      bool odd = k % 2 == 1;
      std::vector<Matrix> next(bNodes.size());
      Matrix start = Matrix::Zero(n, n);
      for (std::size_t p = 0; p < np; ++p) {
        double half = 0.5 * (breaks[p + 1] - breaks[p]);
        std::vector<Matrix> integrand(static_cast<std::size_t>(q));
        for (Eigen::Index j = 0; j < q; ++j) {
          std::size_t idx = p * static_cast<std::size_t>(q) + static_cast<std::size_t>(j);
          integrand[static_cast<std::size_t>(j)] =
              -4.0 * term[idx] * (odd ? bNodes[idx] : Matrix(bNodes[idx].conjugate()));
        }
        Matrix panelTotal = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < q; ++i) {
          Matrix acc = start;
          for (Eigen::Index j = 0; j < q; ++j)
            acc += half * rule.integration(i, j) * integrand[static_cast<std::size_t>(j)];
          next[p * static_cast<std::size_t>(q) + static_cast<std::size_t>(i)] = acc;
          panelTotal += half * rule.weights(i) * integrand[static_cast<std::size_t>(i)];
        }
        start += panelTotal;
      }
      (odd ? out.map.v : out.map.u) += start;
      term = std::move(next);
    }
  }
  // Remainders of the cosh / sinh series past the truncation order.
  double x = 4.0 * out.integralB;
  double coshPartial = 0.0, sinhPartial = 0.0, power = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) power *= x / k;
    (k % 2 == 0 ? coshPartial : sinhPartial) += power;
  }
  out.tailBoundU = std::max(0.0, std::cosh(x) - coshPartial);
  out.tailBoundV = std::max(0.0, std::sinh(x) - sinhPartial);
  return out;
}

double SymplecticResiduals::max() const { return std::max({uuStar, uStarU, uvT, uStarV}); }

SymplecticResiduals symplectic_residuals(const BogoliubovMap& map) {
  const Matrix& u = map.u;
  const Matrix& v = map.v;
  Matrix one = Matrix::Identity(u.rows(), u.cols());
  return {hs_norm(u * u.adjoint() - v * v.adjoint() - one), hs_norm(u.adjoint() * u - v.transpose() * v.conjugate() - one),
          hs_norm(u * v.transpose() - v * u.transpose()), hs_norm(u.adjoint() * v - v.transpose() * u.conjugate())};
}

NormBounds norm_bounds(const BogoliubovMap& map, double intB) {
  NormBounds out;
  Matrix one = Matrix::Identity(map.u.rows(), map.u.cols());
  out.uLhs = 1.0 + hs_norm(map.u - one);
  out.uRhs = std::cosh(4.0 * intB);
  out.vLhs = hs_norm(map.v);
  out.vRhs = std::sinh(4.0 * intB);
  out.uHolds = out.uLhs <= out.uRhs + 1e-10;
  out.vHolds = out.vLhs <= out.vRhs + 1e-10;
  return out;
}

namespace {

void require_symplectic(const BogoliubovMap& map, double mapTol) {
  SymplecticResiduals r = symplectic_residuals(map);
  if (r.max() > mapTol) {
    std::ostringstream msg;
    msg << "symplectic residual " << r.max() << " exceeds " << mapTol;
    throw Error(ErrorKind::MapInvalid, msg.str());
  }
}

}  // namespace

QuadraticSpec transform_spec(const BogoliubovMap& map, const QuadraticSpec& spec, double mapTol) {
  require_symplectic(map, mapTol);
  if (map.shift.size() > 0 && map.shift.norm() > 0.0)
    throw Error(ErrorKind::MapInvalid, "transform_spec needs a map without shift");
  const Matrix& u = map.u;
  const Matrix& v = map.v;
  const Matrix& omega = spec.omega.matrix();
  const Matrix& b = spec.b.matrix();
  Matrix uStar = u.adjoint();
  Matrix vT = v.transpose();
  Matrix omegaNew = uStar * omega * u + vT * omega.conjugate() * v.conjugate() + 2.0 * uStar * b * v.conjugate() +
                    2.0 * vT * b.conjugate() * u;
  Matrix bNew = uStar * omega * v + uStar * b * u.conjugate() + vT * b.conjugate() * v;
  double cNew = spec.c0 + (v.adjoint() * omega * v).trace().real() +
                2.0 * (v.adjoint() * b * u.conjugate()).trace().real();
  return {OneParticleOperator::hermitian(omegaNew), OneParticleOperator::symmetric(bNew), cNew, spec.label};
}

BogoliubovMap inverse(const BogoliubovMap& map) {
  return {map.u.adjoint(), -map.v.transpose(), Vector::Zero(map.u.rows()), map.t, map.s};
}

BogoliubovMap compose(const BogoliubovMap& first, const BogoliubovMap& second) {
  return {first.u * second.u + first.v * second.v.conjugate(), first.u * second.v + first.v * second.u.conjugate(),
          Vector::Zero(first.u.rows()), first.s, second.t};
}

GeneratorDecomposition decompose_generator(const BogoliubovMap& map, double decompTol) {
  require_symplectic(map, kMapTol);
  const auto n = map.dim();
  // Polar part u = P W with P = (u u^*)^{1/2} >= 1.
  Matrix p = psd_sqrt(map.u * map.u.adjoint());
  Matrix w = p.lu().solve(map.u);
  Matrix sym = symmetrize(map.v * w.transpose());

  // Takagi factorization of the complex symmetric sym via its real embedding.
  Eigen::MatrixXd real = sym.real(), imag = sym.imag();
  Eigen::MatrixXd embed(2 * n, 2 * n);
  embed << real, imag, imag, -real;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(embed);
  double cutoff = 1e-12 * std::max(1.0, hs_norm(sym));
  std::vector<std::pair<double, Vector>> takagi;
  for (Eigen::Index i = 2 * n - 1; i >= 0; --i) {
    double sigma = es.eigenvalues()(i);
    if (sigma <= cutoff || static_cast<Eigen::Index>(takagi.size()) == n) break;
    Vector g = es.eigenvectors().col(i).head(n).cast<Complex>() +
               Complex(0.0, 1.0) * es.eigenvectors().col(i).tail(n).cast<Complex>();
    takagi.emplace_back(sigma, g / g.norm());
  }
  const auto rank = static_cast<Eigen::Index>(takagi.size());
  GeneratorDecomposition out;
  out.gBasis = Matrix::Zero(n, n);
  out.alphas = RealVector::Zero(n);
  for (Eigen::Index k = 0; k < rank; ++k) {
    out.gBasis.col(k) = takagi[static_cast<std::size_t>(k)].second;
    out.alphas(k) = std::asinh(takagi[static_cast<std::size_t>(k)].first);
  }
  if (rank < n) {
    Matrix seed(n, n);
    seed << out.gBasis.leftCols(rank), Matrix::Identity(n, n - rank);
    Eigen::HouseholderQR<Matrix> qr(seed);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    out.gBasis.rightCols(n - rank) = q.rightCols(n - rank);
  }
  out.hBasis = w.adjoint() * out.gBasis;
  out.shift = map.shift.size() == n ? map.shift : Vector::Zero(n);

  // h = -i log(residual unitary); the unitary is normal, so its Schur form is diagonal.
  Matrix residual = out.hBasis * out.gBasis.adjoint();
  Eigen::ComplexSchur<Matrix> schur(residual);
  Matrix phases = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Complex lambda = schur.matrixT()(k, k);
    if (std::abs(lambda + 1.0) < 1e-8)
      throw Error(ErrorKind::LogBranch, "residual unitary has an eigenvalue at -1");
    phases(k, k) = std::arg(lambda);
  }
  out.hMatrix = hermitize(schur.matrixU() * phases * schur.matrixU().adjoint());

  BogoliubovMap rebuilt = rebuild(out);
  out.reconstructionResidual = hs_norm(rebuilt.u - map.u) + hs_norm(rebuilt.v - map.v);
  if (out.reconstructionResidual > decompTol) {
    std::ostringstream msg;
    msg << "reconstruction residual " << out.reconstructionResidual << " exceeds " << decompTol;
    throw Error(ErrorKind::MapInvalid, msg.str());
  }
  return out;
}

BogoliubovMap rebuild(const GeneratorDecomposition& d) {
  const auto n = d.gBasis.rows();
  RealVector c = d.alphas.array().cosh();
  RealVector s = d.alphas.array().sinh();
  Matrix w = unitary_from_hermitian(d.hMatrix, 1.0);  // exp(-i h) = W
  Matrix u = d.gBasis * c.cast<Complex>().asDiagonal() * d.gBasis.adjoint() * w;
  Matrix v = d.gBasis * s.cast<Complex>().asDiagonal() * d.gBasis.transpose() * w.conjugate();
  Vector shift = d.shift.size() == n ? d.shift : Vector::Zero(n);
  return {u, v, shift, 0.0, 0.0};
}

}  // namespace bwflow::bogoliubov
