#include "upswing/sim.hpp"

#include <algorithm>
#include <cmath>

#include "upswing/errors.hpp"

namespace upswing::sim {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_into(double angle, double lo) {
  // into [lo, lo + 2pi)
  double a = std::fmod(angle - lo, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a + lo;
}
}  // namespace

std::string to_string(SystemId id) {
  switch (id) {
    case SystemId::Cartpole: return "cartpole";
    case SystemId::Acrobot: return "acrobot";
    case SystemId::Pendubot: return "pendubot";
  }
  return "?";
}

SystemId system_from_string(const std::string& name) {
  if (name == "cartpole") return SystemId::Cartpole;
  if (name == "acrobot") return SystemId::Acrobot;
  if (name == "pendubot") return SystemId::Pendubot;
  throw ConfigError("unknown system '" + name + "'");
}

double EnvConfig::action_scale() const {
  return system == SystemId::Cartpole ? cartpole.u_max_N : pendulum.tau_max_Nm;
}

int EnvConfig::steps_per_episode() const {
  return static_cast<int>(std::llround(horizon_s / integrator.dt_s));
}

physics::DoublePendulumParams EnvConfig::pendulum_params() const {
  physics::DoublePendulumParams p = pendulum;
  p.actuation = (system == SystemId::Acrobot) ? physics::Actuation::Acrobot
                                              : physics::Actuation::Pendubot;
  return p;
}

void validate(const EnvConfig& cfg) {
  if (cfg.system == SystemId::Cartpole) {
    physics::validate(cfg.cartpole);
  } else {
    physics::validate(cfg.pendulum_params());
  }
  if (!(cfg.horizon_s > 0.0)) throw ConfigError("env: horizon must be positive");
  if (cfg.steps_per_episode() < 1) throw ConfigError("env: horizon shorter than one timestep");
  if (!(cfg.obs_vel_scale > 0.0)) throw ConfigError("env: obs_vel_scale must be positive");
  if (cfg.reset_noise < 0.0 || cfg.action_noise_std < 0.0 || cfg.obs_noise_std_rad < 0.0)
    throw ConfigError("env: noise levels must be >= 0");
}

int EnvConfig::obs_dim() const {
  if (obs_encoding == ObsEncoding::Wrapped) return 4;
  return system == SystemId::Cartpole ? 5 : 6;
}

namespace {

Observation observe_angles(const EnvConfig& cfg, const physics::SystemState& state,
                           double angle_noise_1, double angle_noise_2) {
  const double q0 = state.q[0] + (cfg.system == SystemId::Cartpole ? 0.0 : angle_noise_1);
  const double q1 = state.q[1] + (cfg.system == SystemId::Cartpole ? angle_noise_1 : angle_noise_2);

  Observation o;
  o.dim = cfg.obs_dim();
  int i = 0;
  if (cfg.obs_encoding == ObsEncoding::Wrapped) {
    if (cfg.system == SystemId::Cartpole) {
      o.data[i++] = q0;  // cart position, not an angle
      o.data[i++] = wrap_into(q1, -0.5 * kPi);
    } else {
      o.data[i++] = wrap_into(q0, -0.5 * kPi);
      o.data[i++] = wrap_into(q1, -kPi);
    }
  } else {
    if (cfg.system == SystemId::Cartpole) {
      o.data[i++] = q0;
      o.data[i++] = std::sin(q1);
      o.data[i++] = std::cos(q1);
    } else {
      o.data[i++] = std::sin(q0);
      o.data[i++] = std::cos(q0);
      o.data[i++] = std::sin(q1);
      o.data[i++] = std::cos(q1);
    }
  }
  o.data[i++] = state.qdot[0] / cfg.obs_vel_scale;
  o.data[i++] = state.qdot[1] / cfg.obs_vel_scale;
  return o;
}

}  // namespace

Observation observe(const EnvConfig& cfg, const physics::SystemState& state) {
  return observe_angles(cfg, state, 0.0, 0.0);
}

Environment::Environment(EnvConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed) {
  validate(cfg_);
  reset();
}

const physics::SystemState& Environment::reset() {
  state_ = cfg_.start_state;
  if (cfg_.reset_noise > 0.0) {
    for (auto& v : state_.q) v += rng_.uniform(-cfg_.reset_noise, cfg_.reset_noise);
    for (auto& v : state_.qdot) v += rng_.uniform(-cfg_.reset_noise, cfg_.reset_noise);
  }
  prev_action_unit_ = 0.0;
  last_control_ = 0.0;
  step_count_ = 0;
  return state_;
}

Observation Environment::observation() {
  if (cfg_.obs_noise_std_rad > 0.0) {
    const double n1 = cfg_.obs_noise_std_rad * rng_.normal();
    const double n2 = cfg_.system == SystemId::Cartpole ? 0.0
                                                        : cfg_.obs_noise_std_rad * rng_.normal();
    return observe_angles(cfg_, state_, n1, n2);
  }
  return observe(cfg_, state_);
}

StepResult Environment::step(double action_unit) {
  const double a = std::clamp(action_unit, -1.0, 1.0);
  double control = a * cfg_.action_scale();
  if (cfg_.action_noise_std > 0.0) {
    control = std::clamp(control + cfg_.action_noise_std * rng_.normal(),
                         -cfg_.action_scale(), cfg_.action_scale());
  }
  last_control_ = control;

  StepResult r;
  try {
    if (cfg_.system == SystemId::Cartpole) {
      r.state = physics::step(state_, control, cfg_.cartpole, cfg_.integrator);
    } else {
      r.state = physics::step(state_, control, cfg_.pendulum_params(), cfg_.integrator);
    }
  } catch (const DivergenceError&) {
    r.state = state_;
    r.diverged = true;
    r.reward = 0.0;
    ++step_count_;
    return r;
  }

  if (cfg_.system == SystemId::Cartpole) {
    r.reward = scoring::cartpole_reward(r.state, cfg_.cartpole);
  } else {
    r.reward = scoring::double_pendulum_reward(r.state, a, prev_action_unit_,
                                               cfg_.reward_weights, cfg_.pendulum_params());
  }
  prev_action_unit_ = a;
  state_ = r.state;
  ++step_count_;
  return r;
}

Trajectory rollout(const policy::Policy& p, const EnvConfig& cfg, const RolloutOptions& opt) {
  Environment env(cfg, mix_seed(opt.seed, 0x51u));
  Rng action_rng(mix_seed(opt.seed, 0xA7u));

  Trajectory traj;
  traj.dt_s = cfg.integrator.dt_s;
  traj.action_scale = cfg.action_scale();
  traj.states.push_back(env.state());

  const int n = cfg.steps_per_episode();
  traj.states.reserve(n + 1);
  traj.controls.reserve(n);
  traj.rewards.reserve(n);

  for (int k = 0; k < n; ++k) {
    const Observation obs = env.observation();
    double action_phys;
    switch (opt.mode) {
      case ControlMode::Greedy:
        action_phys = policy::greedy_action(p, obs)[0];
        break;
      case ControlMode::Noisy:
        action_phys = policy::noisy_greedy_action(p, obs, opt.noise, action_rng)[0];
        break;
      case ControlMode::Stochastic:
        action_phys = policy::sample_action(p, obs, action_rng).action[0];
        break;
    }
    const StepResult r = env.step(action_phys / p.action_scale);
    if (r.diverged) {
      traj.diverged = true;
      break;
    }
    traj.states.push_back(r.state);
    traj.controls.push_back(env.last_control());
    traj.rewards.push_back(r.reward);
  }
  return traj;
}

double measure_action_variance(const policy::Policy& p, const EnvConfig& cfg,
                               std::uint64_t seed) {
  Environment env(cfg, mix_seed(seed, 0x51u));
  std::vector<std::vector<double>> observations;
  const int n = cfg.steps_per_episode();
  observations.reserve(n);
  for (int k = 0; k < n; ++k) {
    const Observation obs = env.observation();
    observations.emplace_back(obs.data.begin(), obs.data.begin() + obs.dim);
    const StepResult r = env.step(policy::greedy_action(p, obs)[0] / p.action_scale);
    if (r.diverged) break;
  }
  return policy::measure_action_variance(p, observations);
}

}  // namespace upswing::sim
