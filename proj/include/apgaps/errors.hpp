#pragma once

#include <stdexcept>
#include <string>

namespace apgaps {

// Precondition violated (bad modulus, residue, parameter range). CLI exit 2.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Query beyond what a table covers.
class RangeError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Numerical target not met at the requested resolution.
class AccuracyError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A built object fails one of its structural conditions.
class ConstructionError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Memory or enumeration budget exceeded. CLI exit 3.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace apgaps
