#pragma once

#include <stdexcept>
#include <string>

namespace evor {

// Argument outside the state/action space or another documented domain.
class InputDomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor/parameter shapes do not chain.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf reached a loss or target.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation requires a finite MDP (oracles) or similar capability.
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace evor
