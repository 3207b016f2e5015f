#pragma once

#include <stdexcept>
#include <string>

namespace dpol {

/// Invalid argument to an operation (negative scale, empty score vector, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Illegal use of a stateful mechanism (query after halt, feed past horizon).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Instance too large for an exact oracle or a net construction.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad experiment configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpol
