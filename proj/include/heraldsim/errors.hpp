#pragma once

#include <stdexcept>
#include <string>

namespace heraldsim {

/// Bad configuration input (parse errors, unknown keys, out-of-range values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physics precondition does not hold: grid coverage, truncation,
/// degenerate states, invalid channel parameters.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GridError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Iterative solver gave up before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace heraldsim
