#pragma once

#include <stdexcept>
#include <string>

namespace rdme {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an update would drive a copy number below zero. Always a
// solver logic bug, never a property of the model.
class NegativePopulation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite rates, runaway growth, failed numerical tolerances.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model file parse failures and schema violations.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rdme
