#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tdvpinn {

/// Invalid configuration value (counts, domains, widths, schedules).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal structure: tape ids out of range, mismatched lengths.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// External data that cannot be read or does not cover what is needed.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data that was read but violates a physical or numerical requirement.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient during training.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// Fixed-point iteration that failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t step, double last_change)
      : std::runtime_error(what), step_(step), last_change_(last_change) {}
  std::size_t step() const noexcept { return step_; }
  double last_change() const noexcept { return last_change_; }

 private:
  std::size_t step_;
  double last_change_;
};

}  // namespace tdvpinn
