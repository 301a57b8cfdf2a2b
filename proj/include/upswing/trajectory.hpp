#pragma once

#include <vector>

#include "upswing/physics.hpp"

namespace upswing::sim {

// Result of one rollout. states has one more entry than controls/rewards
// (states[k] is the state at time k*dt, controls[k] was applied over [k, k+1)*dt).
// Controls are in physical units (N or N*m). A diverged trajectory is truncated
// at the step that left the sanity bound.
struct Trajectory {
  double dt_s = 0.0;
  double action_scale = 1.0;
  std::vector<physics::SystemState> states;
  std::vector<double> controls;
  std::vector<double> rewards;
  bool diverged = false;

  int steps() const { return static_cast<int>(controls.size()); }
  double duration_s() const { return dt_s * steps(); }
};

}  // namespace upswing::sim
