#pragma once

#include <stdexcept>
#include <string>

namespace poksvd {

// Caller broke a precondition (dimension mismatch, missing phase column, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid user-facing configuration value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical or data-dependent failure during a computation.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system or file-format failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace poksvd
