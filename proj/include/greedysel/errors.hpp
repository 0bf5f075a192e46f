#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace greedysel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class ZeroVarianceColumn : public Error {
 public:
  explicit ZeroVarianceColumn(std::ptrdiff_t column)
      : Error("column " + std::to_string(column + 1) + " has zero variance"),
        column_(column) {}
  /// 0-based column index.
  std::ptrdiff_t column() const noexcept { return column_; }

 private:
  std::ptrdiff_t column_;
};

/// Columns of an index set are numerically linearly dependent.
class SingularProjection : public Error {
 public:
  using Error::Error;
};

/// A population sub-covariance Γ(J) has a pivot below the floor.
class SingularSubcovariance : public Error {
 public:
  using Error::Error;
};

class InvalidPenalty : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class TooLargeForExhaustive : public Error {
 public:
  using Error::Error;
};

class DivisionByZeroTail : public Error {
 public:
  using Error::Error;
};

class UnstableAR : public Error {
 public:
  using Error::Error;
};

class DegenerateDesign : public Error {
 public:
  using Error::Error;
};

/// A specification value failed validation; `field()` names the offending field.
class InvalidSpec : public Error {
 public:
  InvalidSpec(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace greedysel
