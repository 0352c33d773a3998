#pragma once

#include <stdexcept>
#include <string>

namespace sven {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (bad token, wrong field count, missing value).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A covariate column with zero variance.
class DegenerateColumnError : public Error {
 public:
  DegenerateColumnError(std::string column)
      : Error("degenerate column (zero variance): " + column), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// Cholesky breakdown or non-positive ridge RSS.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ModelTooLargeError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace sven
