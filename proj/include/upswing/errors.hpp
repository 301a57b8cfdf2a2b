#pragma once

#include <stdexcept>
#include <string>

namespace upswing {

// Bad values fed into the dynamics/scoring (non-finite state, empty trajectory, ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration: dimension mismatches, out-of-range hyperparameters, unknown keys.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A simulated state left the sanity bound; the rollout is failed, not propagated as NaN.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN in a training loss; carries the diagnostic dump.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace upswing
