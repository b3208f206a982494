#pragma once

#include <stdexcept>
#include <string>

namespace clickcode {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or violated precondition on a parameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File-system failure (missing file, short read, failed write).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file was readable but its content does not follow the declared format.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

/// Dimension or length mismatch between inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed (factorization breakdown, non-finite input).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace clickcode
