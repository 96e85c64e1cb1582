#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mras {

/// Rejected input: bad bounds, size mismatches, invalid configuration values.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Observation data violating a structural assumption (e.g. positivity).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver failed to reach tolerance. Carries the time step when
/// raised from inside a run.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what,
                       std::optional<std::size_t> step = std::nullopt)
      : std::runtime_error(what), step_(step) {}

  std::optional<std::size_t> step() const { return step_; }

 private:
  std::optional<std::size_t> step_;
};

}  // namespace mras
