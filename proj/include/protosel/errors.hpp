#pragma once

#include <stdexcept>
#include <string>

namespace protosel {

// Bad user input: malformed files, dimension mismatches, budget violations.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical precondition failure, e.g. a kernel block that is not PSD.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Downstream evaluation could not be performed (empty prototype set etc).
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace protosel
