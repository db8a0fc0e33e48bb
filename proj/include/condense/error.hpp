#pragma once

#include <stdexcept>
#include <string>

namespace condense {

/// Base of every error raised by the library. `exit_code()` is the process
/// exit status the command-line front end maps the error to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration or a violated API contract.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Non-finite values or other numerical breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Incompatible tensor shapes.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace condense
