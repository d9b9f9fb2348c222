#pragma once

#include <stdexcept>
#include <string>

namespace dashgs {

/// Bad or unusable input: malformed files, invalid arguments, violated
/// preconditions. The CLI maps this to exit code 1.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a computation that cannot produce a meaningful
/// result. The CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dashgs
