#pragma once

#include <stdexcept>

namespace agneslab {

// A documented precondition was broken by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Structurally valid request that this build cannot honor
// (e.g. orthogonal noise in one dimension).
class UnsupportedConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters fall outside the admissible region of the guarantee they were
// requested for; the message names the violated inequality.
class AdmissibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// sigma >= 1: the NAG guarantees are void.
class NoiseTooLargeError : public AdmissibilityError {
 public:
  using AdmissibilityError::AdmissibilityError;
};

class UndefinedSlopeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration failed validation (strict schema).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace agneslab
