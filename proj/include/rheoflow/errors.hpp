#pragma once

#include <stdexcept>
#include <string>

namespace rheoflow {

/// Invalid or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A solver gave up: blow-up guard, lost positivity, non-contraction (CLI exit code 3).
struct SolverAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rheoflow
