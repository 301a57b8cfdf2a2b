#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "upswing/physics.hpp"
#include "upswing/policy.hpp"
#include "upswing/rng.hpp"
#include "upswing/scoring.hpp"
#include "upswing/trajectory.hpp"

namespace upswing::sim {

enum class SystemId { Cartpole, Acrobot, Pendubot };

std::string to_string(SystemId id);
SystemId system_from_string(const std::string& name);

// How angle coordinates reach the policy. Trig encodes each angle as
// (sin, cos) — seam-free, the default. Wrapped keeps plain angles, folded so
// that hanging and upright are both interior points: the primary angle into
// (-pi/2, 3pi/2], the relative angle into (-pi, pi].
enum class ObsEncoding { Trig, Wrapped };

struct EnvConfig {
  SystemId system = SystemId::Cartpole;
  physics::CartpoleParams cartpole;
  physics::DoublePendulumParams pendulum;  // actuation follows `system`
  physics::IntegratorConfig integrator;    // integrator.dt_s is the control timestep
  double horizon_s = 3.0;
  scoring::DoublePendulumRewardWeights reward_weights;
  physics::SystemState start_state;  // hanging rest by default
  double reset_noise = 0.0;          // uniform half-width on q and qdot at reset
  ObsEncoding obs_encoding = ObsEncoding::Trig;
  double obs_vel_scale = 1.0;        // observed velocities are divided by this
  double action_noise_std = 0.0;     // physical units, added to the applied control
  double obs_noise_std_rad = 0.0;    // added to observed angle coordinates

  double action_scale() const;
  int steps_per_episode() const;
  int obs_dim() const;
  physics::DoublePendulumParams pendulum_params() const;  // with actuation applied
};

void validate(const EnvConfig& cfg);

// Fixed-capacity observation vector (largest layout: sin/cos of two angles
// plus two velocities).
struct Observation {
  std::array<double, 6> data{};
  int dim = 0;

  operator std::span<const double>() const { return {data.data(), static_cast<std::size_t>(dim)}; }
  std::span<const double> span() const { return {data.data(), static_cast<std::size_t>(dim)}; }
};

// What the policy sees; velocities are divided by obs_vel_scale, the cart
// position passes through unchanged. Measurement noise (when configured) is
// added to the angles before encoding.
Observation observe(const EnvConfig& cfg, const physics::SystemState& state);

struct StepResult {
  physics::SystemState state;
  double reward = 0.0;
  bool diverged = false;
};

// One system behind a step/reset interface. Owns the rng that drives reset,
// action and measurement noise, so rollouts are pure functions of (cfg, seed).
class Environment {
 public:
  Environment(EnvConfig cfg, std::uint64_t seed);

  const physics::SystemState& reset();
  Observation observation();  // consumes measurement noise draws when configured
  // action_unit in [-1, 1]; physical control = action_unit * action_scale (+ noise), clamped.
  StepResult step(double action_unit);

  const EnvConfig& config() const { return cfg_; }
  const physics::SystemState& state() const { return state_; }
  double last_control() const { return last_control_; }
  int step_count() const { return step_count_; }
  bool episode_over() const { return step_count_ >= cfg_.steps_per_episode(); }

 private:
  EnvConfig cfg_;
  physics::SystemState state_;
  Rng rng_;
  double prev_action_unit_ = 0.0;
  double last_control_ = 0.0;
  int step_count_ = 0;
};

enum class ControlMode { Greedy, Noisy, Stochastic };

struct RolloutOptions {
  ControlMode mode = ControlMode::Greedy;
  policy::NoiseInjectionConfig noise;  // used in Noisy mode
  std::uint64_t seed = 0;
};

// Roll the policy for one episode; never throws on divergence (the trajectory
// is truncated and flagged instead).
Trajectory rollout(const policy::Policy& p, const EnvConfig& cfg, const RolloutOptions& opt);

// Greedy rollout collecting per-step policy variances (pre-squash); their mean
// becomes the injected-noise variance for fine-tuning.
double measure_action_variance(const policy::Policy& p, const EnvConfig& cfg,
                               std::uint64_t seed);

}  // namespace upswing::sim
