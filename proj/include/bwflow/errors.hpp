#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bwflow {

enum class ErrorKind {
  NotPSD,
  KernelOverlap,
  NotReal,
  BlowupDetected,
  StepSizeUnderflow,
  NotConverged,
  InsufficientData,
  PathGap,
  MapInvalid,
  LogBranch,
  SizeLimit,
  NotOnManifold,
  NotInRegime,
  PastBlowup,
  OutOfRange,
  ParseError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bwflow
