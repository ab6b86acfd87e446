#pragma once

#include <stdexcept>
#include <string>

namespace setn {

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

/// A hyperparameter or argument lies outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A class label is outside [0, C).
class LabelError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf appeared in a tensor.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed or inconsistent (files, records, ids).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact is unreadable: bad magic, version, or checksum.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// A checkpoint was requested under a different model kind than it stores.
class KindMismatchError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace setn
