#pragma once

#include <stdexcept>
#include <string>

namespace prefbandit {

// Invalid user-supplied parameters (K, d, rho, lambda, config files, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Violated mathematical preconditions (empty dataset, zero gap, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: dimension mismatches, non-PD matrices, lost precision.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// An agent step that cannot proceed (e.g. the MAP solve did not converge).
class StepError : public std::runtime_error {
 public:
  explicit StepError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace prefbandit
