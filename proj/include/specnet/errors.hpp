#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace specnet {

// Base of everything the library throws on a contract violation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or combination; the message names the key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Container / manifest / checkpoint content is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ExtentMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class NonFiniteError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Dataset-level problems: empty, heterogeneous shapes, bad labels.
class DatasetError : public Error {
 public:
  using Error::Error;
};

// Numerically degenerate input, e.g. a spectrum with zero covariance.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong order (backward before forward, stepping
// with no accumulated examples).
class StateError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// Filesystem failure (open/read/write), message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace specnet
