#pragma once

#include <stdexcept>
#include <string>

namespace sefusion {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate an operation's contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (files, labels, widths).
class DataError : public Error {
 public:
  using Error::Error;
};

// A class prior that cannot be used as-is (zero probability for some class).
class PriorError : public DataError {
 public:
  using DataError::DataError;
};

// Non-finite values showed up where finite ones are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant, e.g. optimizer state out of sync with params.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sefusion
