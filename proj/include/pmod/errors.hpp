#pragma once

#include <stdexcept>
#include <string>

namespace pmod {

/// Base class for failures caused by the numerics rather than by the caller's
/// configuration (the CLI maps these to exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EvaluationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateJacobian : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonFiniteIntegrand : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InversionFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InconsistentSubmersion : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InfeasibleSurface : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Invalid arguments: wrong shapes, empty boxes, p <= 1, unknown names.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pmod
