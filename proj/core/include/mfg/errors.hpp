#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

/// Model definition or dimension problem (bad inputs, invariant violations).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The induced chain has more than one recurrent class, so no unique
/// invariant measure exists; the stability assumptions fail for that control.
class NonUniqueInvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver ran out of its iteration budget.
class IterationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested split-level gamma1 exceeds what the product minorization
/// supports; some residual-kernel row would go negative.
class MinorizationTooTightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested evaluation backend cannot serve the request (wrong cost kind,
/// enumeration budget exceeded, ...).
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfg
