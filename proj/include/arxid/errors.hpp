#pragma once

#include <stdexcept>
#include <string>

namespace arxid {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates a documented precondition (e.g. a noise covariance
/// that is not PSD, a non-positive horizon).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The system (or an estimate of it) is not asymptotically stable.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical kernel failed to converge.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int iterations)
      : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}
  explicit NumericalError(const std::string& what) : Error(what) {}

  int iterations() const { return iterations_; }

 private:
  int iterations_ = 0;
};

/// Fourier data that cannot describe a real signal.
class InconsistentCoefficients : public Error {
 public:
  using Error::Error;
};

}  // namespace arxid
