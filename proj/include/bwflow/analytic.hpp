#pragma once

#include <vector>

#include "bwflow/spec.hpp"

namespace bwflow::analytic {

// One 2x2 block: omega = diag(omegaMinus, omegaPlus), b = [[0, b], [b, 0]].
// b is the matrix entry, so each block contributes 2 b^2 to |B|_HS^2.
struct Block {
  double omegaMinus = 0.0;
  double omegaPlus = 0.0;
  double b = 0.0;
};

struct BlockModelParams {
  std::vector<Block> blocks;
};

struct BlockState {
  double omegaMinus = 0.0;
  double omegaPlus = 0.0;
  double bSquared = 0.0;
};

struct BlowupState {
  double omega = 0.0;  // both diagonal entries
  double b = 0.0;
  double tMax = 0.0;
};

// Block k occupies indices (2k, 2k+1) = (minus, plus).
QuadraticSpec block_spec(const BlockModelParams& params, std::string label = {});

// |omegaPlus*omegaMinus - 4b^2| <= 1e-12 * max(1, omegaPlus*omegaMinus)
bool is_equal_product(const Block& block);

BlockState exact_equal_product(double omegaMinus, double omegaPlus, double b, double t);
BlockState exact_generic(double omegaMinus, double omegaPlus, double b, double t);
BlowupState exact_blowup(double b, double t);

// Picks the branch matching the block's regime.
BlockState exact_block(const Block& block, double t);

// Limit omega for a block spec; 2K x 2K.
Matrix exact_limit_block(const BlockModelParams& params);

QuadraticSpec pivotal_family(int k);
QuadraticSpec mixed_family(double b1, int k);
BlockModelParams pivotal_params(int k);
BlockModelParams mixed_params(double b1, int k);

// (omega_t, b_t) for a whole block spec at time t, with c_t from the
// trace identity 2(c_t - c_0) = scalarSign * tr(omega_0 - omega_t).
struct ExactState {
  Matrix omega;
  Matrix b;
  double c = 0.0;
};
ExactState exact_block_state(const BlockModelParams& params, double t, double c0, double scalarSign);

}  // namespace bwflow::analytic
