#pragma once

#include <stdexcept>
#include <string>

namespace funspec {

/// Precondition or contract violation on inputs (grid mismatch, out-of-range
/// parameters, non-Hermitian operator handed to a Hermitian routine).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Evaluation at a point where the object is undefined, e.g. a long-memory
/// spectral density at frequency zero.
class PoleError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Numerical breakdown (non-finite values, failed eigensolve).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace funspec
