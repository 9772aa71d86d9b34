#pragma once

#include <stdexcept>
#include <string>

namespace ppuc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (JSON, CSV, date strings, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Data-level problems: gaps in time series, insufficient history, bad splits.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failure reported by, or while talking to, the optimization backend.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace ppuc
