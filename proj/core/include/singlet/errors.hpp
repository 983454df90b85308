#pragma once

#include <stdexcept>
#include <string>

namespace singlet {

/// Invalid or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integrator instability, trace drift, failed eigen-solve and similar.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace singlet
