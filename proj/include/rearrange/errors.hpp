#pragma once

#include <stdexcept>
#include <string>

namespace rearrange {

// Every error raised by the library derives from Error, so callers that only
// care about "something went wrong" can catch a single type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition on an argument violated (bad basis, out-of-range parameter).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Linear system or factorization that cannot be solved (degenerate simplex).
class SingularError : public Error {
 public:
  using Error::Error;
};

/// A covariance model that is not positive semidefinite on the requested points.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Desk-scale guard exceeded (too many points for a dense factorization).
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Missing or inconsistent input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Name not found in one of the catalogs (germs, models, limits).
class CatalogError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace rearrange
