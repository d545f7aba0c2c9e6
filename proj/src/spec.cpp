#include "bwflow/spec.hpp"

#include <sstream>

namespace bwflow {

QuadraticSpec QuadraticSpec::make(const Matrix& omega, const Matrix& b, double c0, std::string label,
                                  double symTol) {
  if (omega.rows() != omega.cols() || b.rows() != b.cols() || omega.rows() != b.rows()) {
    std::ostringstream msg;
    msg << "shape mismatch: omega " << omega.rows() << "x" << omega.cols() << ", b " << b.rows() << "x"
        << b.cols();
    throw Error(ErrorKind::NotOnManifold, msg.str());
  }
  QuadraticSpec spec{OneParticleOperator::hermitian(omega), OneParticleOperator::symmetric(b), c0,
                     std::move(label)};
  if (spec.omega.deviation() > symTol)
    throw Error(ErrorKind::NotOnManifold, "omega is not hermitian (relative defect " +
                                              std::to_string(spec.omega.deviation()) + ")");
  if (spec.b.deviation() > symTol)
    throw Error(ErrorKind::NotOnManifold, "b is not symmetric (relative defect " +
                                              std::to_string(spec.b.deviation()) + ")");
  return spec;
}

}  // namespace bwflow
