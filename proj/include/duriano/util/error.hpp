#pragma once

#include <stdexcept>
#include <string>

namespace duriano {

// Raised for malformed inputs supplied by the caller (files, ids, shapes).
// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an operation's configuration is inconsistent.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Raised when numerical state becomes unusable (non-finite loss or weights).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace duriano
