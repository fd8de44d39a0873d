// SPDX-License-Identifier: Apache-2.0

#ifndef LRPTEXT_ERRORS_H_
#define LRPTEXT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lrptext {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: unknown field names, out-of-range options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data. Carries the 1-based line number when
// the problem is tied to a record in a text file (0 otherwise).
class DataError : public Error {
 public:
  explicit DataError(const std::string &message, std::size_t line = 0)
      : Error(line == 0 ? message
                        : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Model container problems.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Tensor shapes that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrptext

#endif  // LRPTEXT_ERRORS_H_
