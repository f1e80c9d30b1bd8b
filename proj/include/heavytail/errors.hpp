#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace heavytail {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A distribution or model parameter is outside its domain.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed (empty, non-finite, mismatched lengths, too small).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A latent correlation matrix is not positive semidefinite.
class NotPsdError : public Error {
 public:
  NotPsdError(std::string matrix_name, double min_eigenvalue)
      : Error("correlation matrix '" + matrix_name +
              "' is not positive semidefinite (minimum eigenvalue " + format(min_eigenvalue) +
              ")"),
        matrix_name_(std::move(matrix_name)),
        min_eigenvalue_(min_eigenvalue) {}

  const std::string& matrix_name() const noexcept { return matrix_name_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  static std::string format(double x) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.6g", x);
    return buffer;
  }

  std::string matrix_name_;
  double min_eigenvalue_;
};

}  // namespace heavytail
