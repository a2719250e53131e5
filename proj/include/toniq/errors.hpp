#pragma once

#include <stdexcept>
#include <string>

namespace toniq {

// Error taxonomy. The CLI maps each family onto a distinct exit code, so new
// error types should derive from one of the four bases below.

/// Bad input: wrong dimensions, out-of-range values, unsupported options.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A scoring curve was applied to samples from a different (instance, layers)
/// context.
class ScoringContextError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failures while running the pipeline itself.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CapacityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ChannelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class GenerationError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class RoutingError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class MitigationError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

/// A single optimization run did not produce a finite cost.
class RunError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

/// Too many runs failed while building a reference or scoring a backend.
class BudgetError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

}  // namespace toniq
