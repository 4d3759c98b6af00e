#pragma once

#include <stdexcept>
#include <string>

namespace sparsegp {

/// Bad arguments: dimension mismatches, out-of-range parameters, malformed files.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Conflicting duplicate entries during sparse assembly.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN, negative curvature or a nonpositive estimate inside an iterative solver.
class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hyperparameter state violates the sparsity requirement of constrained training.
class ConstraintViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sparsegp
