#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "bwflow/bogoliubov.hpp"

namespace bwflow::fock {

inline constexpr std::size_t kDefaultMaxDim = 20000;

// Reads BWFLOW_MAX_DIM, falling back to kDefaultMaxDim.
std::size_t max_dim_from_env();

using Occupation = std::vector<int>;

// Occupation states with total number <= cutoff, ordered by total number
// and then lexicographically.
class TruncatedFock {
 public:
  TruncatedFock(int nModes, int cutoff, std::size_t maxDim = max_dim_from_env());

  int modes() const noexcept { return nModes_; }
  int cutoff() const noexcept { return cutoff_; }
  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(basis_.size()); }
  const std::vector<Occupation>& basis() const noexcept { return basis_; }
  int total(Eigen::Index i) const { return totals_[static_cast<std::size_t>(i)]; }
  // -1 when the occupation lies outside the truncation.
  Eigen::Index index_of(const Occupation& occ) const;
  // Number of basis states with total number <= sector.
  Eigen::Index sector_dim(int sector) const;

 private:
  int nModes_;
  int cutoff_;
  std::vector<Occupation> basis_;
  std::vector<int> totals_;
  std::map<Occupation, Eigen::Index> index_;
};

TruncatedFock build_basis(int nModes, int cutoff, std::size_t maxDim = max_dim_from_env());

enum class Ladder { annihilate, create };

// k is 0-based.
Matrix ladder(const TruncatedFock& fock, int k, Ladder kind);
Matrix number_op(const TruncatedFock& fock);

// Built from products of truncated ladders. Because those products only
// ever pass through states inside the cutoff when the end states are inside,
// the result equals P H P and is exactly hermitian; the residual is still
// reported by hermiticity_residual.
Matrix hamiltonian_op(const TruncatedFock& fock, const QuadraticSpec& spec);
double hermiticity_residual(const Matrix& h);

// G = 2i sum (b_kl a_k^* a_l^* - conj(b_kl) a_k a_l)
Matrix generator_op(const TruncatedFock& fock, const Matrix& b);

// Leading sub-block on total number <= sector (the basis is graded).
Matrix interior(const TruncatedFock& fock, const Matrix& op, int sector);

struct Propagator {
  Matrix u;
  double unitarityResidual = 0.0;  // |U^* U - 1| on total number <= cutoff - 4
};

// dU/dt = -i G_t U, U_ss = 1.
Propagator propagate(const TruncatedFock& fock, const bogoliubov::BPath& path, double s, double t,
                     double tol = 1e-10);

// |P (U H_s U^* - H_t) P| / |P H_t P| with P onto total number <= sectorCut.
double conjugation_residual(const TruncatedFock& fock, const Matrix& u, const QuadraticSpec& specS,
                            const QuadraticSpec& specT, int sectorCut);

// |[H, N]| on total number <= cutoff - 2.
double n_diag_residual(const TruncatedFock& fock, const Matrix& h);

struct GroundEnergy {
  double energy = 0.0;
  double convergenceEstimate = 0.0;  // |E(cutoff) - E(cutoff - 4)|
};
GroundEnergy ground_energy(const TruncatedFock& fock, const QuadraticSpec& spec);

struct OffDiagBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};
// |W (N+1)^-1| on total number <= cutoff - 2 against (4 + sqrt 2)|b|_HS,
// with W = sum b a^* a^* + conj(b) a a.
OffDiagBound offdiag_relative_norm(const TruncatedFock& fock, const Matrix& b);

}  // namespace bwflow::fock
