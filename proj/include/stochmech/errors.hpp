#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stochmech {

/// Bad argument to a library call (maps to CLI exit code 2 when it reaches
/// the command line through spec validation).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration violates a declared constraint (resolution rule, ε = √(ħ/m), ...).
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Failure while a simulation or oracle is running (CLI exit code 3).
class SimulationError : public std::runtime_error {
 public:
  SimulationError(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class TrajectoryError : public SimulationError {
 public:
  TrajectoryError(std::size_t trajectory, const std::string& what)
      : SimulationError("sde", "trajectory " + std::to_string(trajectory) + ": " + what),
        trajectory_(trajectory) {}
  std::size_t trajectory() const noexcept { return trajectory_; }

 private:
  std::size_t trajectory_;
};

/// Split-step evolution lost more norm than allowed.
class StepSizeError : public SimulationError {
 public:
  explicit StepSizeError(const std::string& what) : SimulationError("quantum", what) {}
};

/// Collapse window carries (almost) no probability.
class DegenerateMeasurement : public SimulationError {
 public:
  explicit DegenerateMeasurement(const std::string& what) : SimulationError("harness", what) {}
};

}  // namespace stochmech
