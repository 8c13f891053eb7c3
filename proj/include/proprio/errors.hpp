#pragma once

#include <stdexcept>
#include <string>

namespace proprio {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by a caller-supplied value (bad angle, size mismatch, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Linear algebra broke down (singular innovation covariance, non-finite state).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Calibration fit could not be computed (too few samples, rank-deficient design).
class FitError : public Error {
 public:
  using Error::Error;
};

/// Fitted voltage-to-orientation map is not monotonic over its range.
class BijectivityError : public FitError {
 public:
  using FitError::FitError;
};

/// Wraps an error raised inside one pipeline stage so callers can tell which stage failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace proprio
