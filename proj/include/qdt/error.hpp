#pragma once

#include <stdexcept>
#include <string>

namespace qdt {

enum class ErrorCode {
  DimensionMismatch,
  NotHermitian,
  ConvergenceFailure,
  SolverNumericalFailure,
  IterationLimit,
  ZeroGamble,
  NotColumnStochastic,
  RangeError,
  UndefinedConditional,
  StateNotInDual,
  PreconditionViolation,
  IncoherentGenerators,
  InvalidLottery,
  InvalidState,
  InvalidArgument,
  InvalidInput,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::SolverNumericalFailure: return "SolverNumericalFailure";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::ZeroGamble: return "ZeroGamble";
    case ErrorCode::NotColumnStochastic: return "NotColumnStochastic";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::UndefinedConditional: return "UndefinedConditional";
    case ErrorCode::StateNotInDual: return "StateNotInDual";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::IncoherentGenerators: return "IncoherentGenerators";
    case ErrorCode::InvalidLottery: return "InvalidLottery";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// CLI maps them onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Solver failures keep the residuals of the last iterate for reporting.
class SolverError : public Error {
 public:
  SolverError(ErrorCode code, const std::string& what, double primal_residual, double dual_residual,
              double gap, int iterations)
      : Error(code, what),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual),
        gap_(gap),
        iterations_(iterations) {}

  double primal_residual() const noexcept { return primal_residual_; }
  double dual_residual() const noexcept { return dual_residual_; }
  double gap() const noexcept { return gap_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double primal_residual_;
  double dual_residual_;
  double gap_;
  int iterations_;
};

}  // namespace qdt
