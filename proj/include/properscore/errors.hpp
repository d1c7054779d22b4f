#pragma once

#include <stdexcept>
#include <string>

namespace properscore {

/// Input violates a documented precondition or schema. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation failed numerically (non-convergence, NaN, non-finite entropy).
/// Maps to CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace properscore
