#pragma once

#include <stdexcept>
#include <string>

namespace dice {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on arguments was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf appeared, a solver broke down, or an iteration diverged.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dice
