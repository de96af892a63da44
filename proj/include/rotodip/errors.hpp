#pragma once

#include <stdexcept>
#include <string>

namespace rotodip {

/// Root of the library error hierarchy.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain (non-positive kappa, odd grid, ...).
struct DomainError : Error {
  using Error::Error;
};

/// An iterative method did not reach its tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

/// Parameter point outside the solvable regime (zeta <= 0 or a dressed
/// trap frequency squared <= 0).
struct UnstableRegimeError : Error {
  using Error::Error;
};

/// Request exceeds a configured capability (polynomial degree cap, ...).
struct CapabilityError : Error {
  using Error::Error;
};

/// A numerical backend (eigensolver, FFT) reported failure.
struct NumericError : Error {
  using Error::Error;
};

/// Operation input invariants violated by the caller.
struct PreconditionError : Error {
  using Error::Error;
};

}  // namespace rotodip
