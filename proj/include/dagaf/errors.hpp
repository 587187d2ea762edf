#pragma once

#include <stdexcept>
#include <string>

namespace dagaf {

// Invalid configuration value or flag combination.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between operands.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value produced by a numeric operation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File parsing or serialization failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dagaf
