#pragma once

#include <stdexcept>
#include <string>

namespace svdpinn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An iterative method ran out of sweeps.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// NaN/Inf appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A point lies on a shell where the problem's coefficients or exact
/// derivatives are singular; callers are expected to reject and resample.
class SingularPointError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration or argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written; message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A persisted file is malformed or does not match what the caller expects.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace svdpinn
