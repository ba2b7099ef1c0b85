#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace netspill {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input, inconsistent configuration or a violated precondition
/// that the caller can fix. The CLI maps this to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical failure: singular moment matrix, eigensolver breakdown.
/// The CLI maps this to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised when a moment matrix is singular or too ill-conditioned to invert.
/// `columns()` lists the regressor columns found to be (near) collinear with
/// earlier ones, in the order of the offending matrix.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(std::string what, std::vector<std::size_t> columns = {})
      : NumericalError(std::move(what)), columns_(std::move(columns)) {}

  const std::vector<std::size_t>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::size_t> columns_;
};

}  // namespace netspill
