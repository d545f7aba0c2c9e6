#include "bwflow/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/SparseCore>

namespace bwflow::fock {

std::size_t max_dim_from_env() {
  if (const char* raw = std::getenv("BWFLOW_MAX_DIM")) {
    try {
      long long value = std::stoll(raw);
      if (value > 0) return static_cast<std::size_t>(value);
    } catch (const std::exception&) {
    }
  }
  return kDefaultMaxDim;
}

namespace {

// binomial(nModes + cutoff, nModes), saturating.
std::size_t basis_size(int nModes, int cutoff) {
  long double value = 1.0L;
  for (int i = 1; i <= nModes; ++i) value = value * static_cast<long double>(cutoff + i) / i;
  if (value > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2))
    return std::numeric_limits<std::size_t>::max() / 2;
  return static_cast<std::size_t>(std::llround(value));
}

// All occupations of nModes summing to total, lexicographically ascending.
void enumerate(int nModes, int total, Occupation& prefix, std::vector<Occupation>& out) {
  if (static_cast<int>(prefix.size()) == nModes - 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int first = 0; first <= total; ++first) {
    prefix.push_back(first);
    enumerate(nModes, total - first, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

TruncatedFock::TruncatedFock(int nModes, int cutoff, std::size_t maxDim) : nModes_(nModes), cutoff_(cutoff) {
  if (nModes < 1 || cutoff < 0) throw Error(ErrorKind::OutOfRange, "need nModes >= 1 and cutoff >= 0");
  std::size_t expected = basis_size(nModes, cutoff);
  if (expected > maxDim) {
    std::ostringstream msg;
    msg << "Fock dimension " << expected << " exceeds limit " << maxDim;
    throw Error(ErrorKind::SizeLimit, msg.str());
  }
  basis_.reserve(expected);
  for (int total = 0; total <= cutoff; ++total) {
    Occupation prefix;
    enumerate(nModes, total, prefix, basis_);
  }
  totals_.reserve(basis_.size());
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    index_.emplace(basis_[i], static_cast<Eigen::Index>(i));
    int sum = 0;
    for (int n : basis_[i]) sum += n;
    totals_.push_back(sum);
  }
}

Eigen::Index TruncatedFock::index_of(const Occupation& occ) const {
  auto it = index_.find(occ);
  return it == index_.end() ? -1 : it->second;
}

Eigen::Index TruncatedFock::sector_dim(int sector) const {
  if (sector < 0) return 0;
  return static_cast<Eigen::Index>(std::upper_bound(totals_.begin(), totals_.end(), sector) - totals_.begin());
}

TruncatedFock build_basis(int nModes, int cutoff, std::size_t maxDim) { return {nModes, cutoff, maxDim}; }

Matrix ladder(const TruncatedFock& fock, int k, Ladder kind) {
  if (k < 0 || k >= fock.modes()) throw Error(ErrorKind::OutOfRange, "mode index out of range");
  const auto dim = fock.dim();
  Matrix op = Matrix::Zero(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    Occupation occ = fock.basis()[static_cast<std::size_t>(j)];
    int& nk = occ[static_cast<std::size_t>(k)];
    double amplitude;
    if (kind == Ladder::annihilate) {
      if (nk == 0) continue;
      amplitude = std::sqrt(static_cast<double>(nk));
      --nk;
    } else {
      amplitude = std::sqrt(static_cast<double>(nk + 1));
      ++nk;
    }
    Eigen::Index i = fock.index_of(occ);
    if (i >= 0) op(i, j) = amplitude;
  }
  return op;
}

Matrix number_op(const TruncatedFock& fock) {
  Matrix n = Matrix::Zero(fock.dim(), fock.dim());
  for (Eigen::Index i = 0; i < fock.dim(); ++i) n(i, i) = fock.total(i);
  return n;
}

namespace {

struct Ladders {
  std::vector<Matrix> down;
  std::vector<Matrix> up;

  explicit Ladders(const TruncatedFock& fock) {
    for (int k = 0; k < fock.modes(); ++k) {
      down.push_back(ladder(fock, k, Ladder::annihilate));
      up.push_back(ladder(fock, k, Ladder::create));
    }
  }
};

void require_modes(const TruncatedFock& fock, Eigen::Index n) {
  if (n != fock.modes()) {
    std::ostringstream msg;
    msg << "operator dimension " << n << " does not match " << fock.modes() << " modes";
    throw Error(ErrorKind::OutOfRange, msg.str());
  }
}

// Pair operators a_k^* a_l^* and a_k a_l for k, l in [0, n), kept sparse:
// each has at most one entry per column.
using Sparse = Eigen::SparseMatrix<Complex>;

struct Pairs {
  std::vector<Sparse> create;
  std::vector<Sparse> annihilate;
  int n;

  explicit Pairs(const TruncatedFock& fock) : n(fock.modes()) {
    Ladders l(fock);
    for (int k = 0; k < n; ++k)
      for (int m = 0; m < n; ++m) {
        Matrix up = l.up[static_cast<std::size_t>(k)] * l.up[static_cast<std::size_t>(m)];
        Matrix down = l.down[static_cast<std::size_t>(k)] * l.down[static_cast<std::size_t>(m)];
        create.push_back(up.sparseView());
        annihilate.push_back(down.sparseView());
      }
  }

  // sum coefCreate(k, m) a_k^* a_m^* + coefAnnihilate(k, m) a_k a_m
  Sparse combine(const Matrix& coefCreate, const Matrix& coefAnnihilate) const {
    Sparse out(create.front().rows(), create.front().cols());
    for (int k = 0; k < n; ++k)
      for (int m = 0; m < n; ++m) {
        auto idx = static_cast<std::size_t>(k * n + m);
        if (coefCreate(k, m) != Complex(0.0)) out += coefCreate(k, m) * create[idx];
        if (coefAnnihilate(k, m) != Complex(0.0)) out += coefAnnihilate(k, m) * annihilate[idx];
      }
    return out;
  }

  Sparse generator(const Matrix& b) const {
    return Complex(0.0, 2.0) * combine(b, -b.conjugate());
  }
};

}  // namespace

Matrix hamiltonian_op(const TruncatedFock& fock, const QuadraticSpec& spec) {
  require_modes(fock, spec.dim());
  Ladders l(fock);
  const Matrix& omega = spec.omega.matrix();
  const Matrix& b = spec.b.matrix();
  Matrix h = spec.c0 * Matrix::Identity(fock.dim(), fock.dim());
  for (int k = 0; k < fock.modes(); ++k)
    for (int m = 0; m < fock.modes(); ++m) {
      const Matrix& upK = l.up[static_cast<std::size_t>(k)];
      const Matrix& downK = l.down[static_cast<std::size_t>(k)];
      if (omega(k, m) != Complex(0.0)) h += omega(k, m) * (upK * l.down[static_cast<std::size_t>(m)]);
      if (b(k, m) != Complex(0.0)) {
        h += b(k, m) * (upK * l.up[static_cast<std::size_t>(m)]);
        h += std::conj(b(k, m)) * (downK * l.down[static_cast<std::size_t>(m)]);
      }
    }
  return h;
}

double hermiticity_residual(const Matrix& h) { return hermitian_defect(h); }

Matrix generator_op(const TruncatedFock& fock, const Matrix& b) {
  require_modes(fock, b.rows());
  return Matrix(Pairs(fock).generator(b));
}

Matrix interior(const TruncatedFock& fock, const Matrix& op, int sector) {
  auto d = fock.sector_dim(sector);
  return op.topLeftCorner(d, d);
}

Propagator propagate(const TruncatedFock& fock, const bogoliubov::BPath& path, double s, double t, double tol) {
  path.require_covers(s, t);
  require_modes(fock, path.at(s).rows());
  const auto dim = fock.dim();
  Propagator out{Matrix::Identity(dim, dim), 0.0};
  if (t > s) {
    Pairs pairs(fock);
    Vector y = out.u.reshaped();
    auto f = [&](double tau, const Vector& yy) {
      Sparse g = pairs.generator(path.at(std::min(tau, t)));
      Matrix du = Complex(0.0, -1.0) * (g * yy.reshaped(dim, dim));
      return Vector(du.reshaped());
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
    out.u = y.reshaped(dim, dim);
  }
  auto d = fock.sector_dim(fock.cutoff() - 4);
  Matrix gram = out.u.adjoint() * out.u;
  out.unitarityResidual = hs_norm(gram.topLeftCorner(d, d) - Matrix::Identity(d, d));
  return out;
}

double conjugation_residual(const TruncatedFock& fock, const Matrix& u, const QuadraticSpec& specS,
                            const QuadraticSpec& specT, int sectorCut) {
  Matrix hs = hamiltonian_op(fock, specS);
  Matrix ht = hamiltonian_op(fock, specT);
  auto d = fock.sector_dim(sectorCut);
  Matrix rows = u.topRows(d);
  Matrix conjugated = rows * hs * rows.adjoint();
  Matrix target = ht.topLeftCorner(d, d);
  double scale = hs_norm(target);
  double diff = hs_norm(conjugated - target);
  return scale > 0.0 ? diff / scale : diff;
}

double n_diag_residual(const TruncatedFock& fock, const Matrix& h) {
  Matrix n = number_op(fock);
  Matrix comm = h * n - n * h;
  return hs_norm(interior(fock, comm, fock.cutoff() - 2));
}

namespace {

double lowest_eigenvalue(const TruncatedFock& fock, const QuadraticSpec& spec) {
  return eigvals_hermitian(hamiltonian_op(fock, spec)).minCoeff();
}

}  // namespace

GroundEnergy ground_energy(const TruncatedFock& fock, const QuadraticSpec& spec) {
  GroundEnergy out;
  out.energy = lowest_eigenvalue(fock, spec);
  if (fock.cutoff() >= 4) {
    TruncatedFock smaller(fock.modes(), fock.cutoff() - 4);
    out.convergenceEstimate = std::abs(out.energy - lowest_eigenvalue(smaller, spec));
  } else {
    out.convergenceEstimate = std::numeric_limits<double>::infinity();
  }
  return out;
}

OffDiagBound offdiag_relative_norm(const TruncatedFock& fock, const Matrix& b) {
  require_modes(fock, b.rows());
  Pairs pairs(fock);
  Matrix w(pairs.combine(b, b.conjugate()));
  auto d = fock.sector_dim(fock.cutoff() - 2);
  Matrix cols = w.leftCols(d);
  for (Eigen::Index j = 0; j < d; ++j) cols.col(j) /= static_cast<double>(fock.total(j) + 1);
  OffDiagBound out;
  out.lhs = op_norm(cols);
  out.rhs = (4.0 + std::numbers::sqrt2) * hs_norm(b);
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

}  // namespace bwflow::fock
