#pragma once

#include <stdexcept>

namespace ptlab {

/// Bad or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A training procedure diverged or missed its quality target.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A protocol precondition (e.g. the oracle accuracy gate) does not hold.
class GateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ptlab
