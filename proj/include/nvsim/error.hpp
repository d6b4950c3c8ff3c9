#pragma once

#include <stdexcept>
#include <string>

namespace nvsim {

// Exception hierarchy. The CLI maps each family onto a process exit code.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

// A numerical precondition was violated: non-Hermitian input, dimension
// mismatch, step size too coarse, vanishing perturbative gap, failed fit
// (exit code 3).
struct NumericalError : Error {
  using Error::Error;
};

struct DimensionError : NumericalError {
  using NumericalError::NumericalError;
};

struct DegeneratePerturbationError : NumericalError {
  using NumericalError::NumericalError;
};

// Filesystem and serialization failures (exit code 4).
struct IoError : Error {
  using Error::Error;
};

}  // namespace nvsim
