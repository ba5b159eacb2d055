#pragma once

#include <stdexcept>
#include <string>

namespace fuselab {

// Root of all toolkit errors. The CLI maps each subclass to a stable exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input with invalid values (exit code 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a closed-form routine (exit code 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed file or missing field (exit code 2).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures (exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

// Overflow, NaN, singular systems (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Joint covariance still singular after the jitter retry; callers may fall back to CI.
class FusionSingularityError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace fuselab
