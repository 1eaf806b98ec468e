#pragma once

#include <stdexcept>
#include <string>

namespace conflict {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input or an unmet precondition (non-stochastic rows, mismatched
/// measures, unreachable levels, infeasible plans).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The conflict iteration left the region where the update law is defined,
/// e.g. a vanishing normalizer or a clearly negative updated mass.
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace conflict
