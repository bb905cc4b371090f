#pragma once

#include <stdexcept>
#include <string>

namespace debias {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid-dimension"; }
};

class ParameterError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parameter"; }
};

/// Phi restricted to the model subspace is not injective.
class SingularRestriction : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "singular-restriction"; }
};

/// Ker Phi and Ker Gamma intersect non-trivially.
class KernelOverlap : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "kernel-overlap"; }
};

class OracleFailure : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "oracle-failure"; }
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "non-finite"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace debias
