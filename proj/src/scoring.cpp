#include "upswing/scoring.hpp"

#include <cmath>

#include "json.hpp"
#include "upswing/errors.hpp"

namespace upswing::scoring {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
}

DoublePendulumRewardWeights default_reward_weights(physics::Actuation actuation) {
  DoublePendulumRewardWeights w;
  w.y_th_m = (actuation == physics::Actuation::Acrobot) ? 0.375 : 0.35;
  return w;
}

double cartpole_reward(const physics::SystemState& state,
                       const physics::CartpoleParams& params) {
  const auto tip = physics::pole_tip(state, params);
  const double dx = tip[0] - 0.0;
  const double dy = tip[1] - params.pole_length_m;
  return -std::sqrt(dx * dx + dy * dy);
}

double double_pendulum_reward(const physics::SystemState& state, double action,
                              double prev_action, const DoublePendulumRewardWeights& w,
                              const physics::DoublePendulumParams& params) {
  const physics::Energy e = physics::mechanical_energy(state, params);
  const double y = physics::end_effector_height(state, params);
  const double da = std::abs(action - prev_action);

  if (y > w.y_th_m) {
    const double align = 1.0 + std::cos(state.q[1]);
    return e.potential_J + w.alpha * align * align - w.beta * e.kinetic_J -
           w.rho1 * action * action - w.phi1 * da;
  }
  const double speed_sq = state.qdot[0] * state.qdot[0] + state.qdot[1] * state.qdot[1];
  return e.potential_J - w.rho2 * action * action - w.phi2 * da - w.eta * speed_sq;
}

std::optional<double> swing_up_time(const sim::Trajectory& traj,
                                    const physics::CartpoleParams& params, double radius) {
  if (traj.states.empty()) throw DomainError("swing_up_time: empty trajectory");
  if (traj.diverged) return std::nullopt;

  const auto inside = [&](const physics::SystemState& s) {
    const auto tip = physics::pole_tip(s, params);
    const double dx = tip[0];
    const double dy = tip[1] - params.pole_length_m;
    return std::sqrt(dx * dx + dy * dy) < radius;
  };

  int k = static_cast<int>(traj.states.size()) - 1;
  if (!inside(traj.states[k])) return std::nullopt;
  while (k >= 0 && inside(traj.states[k])) --k;
  return (k + 1) * traj.dt_s;
}

CriteriaResult extract_criteria(const sim::Trajectory& traj,
                                const physics::DoublePendulumParams& params,
                                const CriteriaConfig& cfg) {
  if (traj.states.empty() || traj.steps() == 0)
    throw DomainError("extract_criteria: empty trajectory");

  const double up_height = (params.l1_m + params.l2_m) * std::cos(cfg.success_cone_rad);
  const auto up = [&](const physics::SystemState& s) {
    return physics::end_effector_height(s, params) > up_height;
  };

  const int n_states = static_cast<int>(traj.states.size());

  // Height-version swing-up time: latest sample below the cone marks the start.
  double t_up = traj.duration_s();
  if (!traj.diverged && up(traj.states[n_states - 1])) {
    int k = n_states - 1;
    while (k >= 0 && up(traj.states[k])) --k;
    t_up = (k + 1) * traj.dt_s;
  }

  const int actuated = (params.actuation == physics::Actuation::Pendubot) ? 0 : 1;
  double energy = 0.0, tau_max = 0.0, tau_integral = 0.0, vel_max = 0.0;
  for (int k = 0; k < traj.steps(); ++k) {
    const double u = traj.controls[k];
    energy += std::abs(u * traj.states[k].qdot[actuated]) * traj.dt_s;
    tau_max = std::max(tau_max, std::abs(u));
    tau_integral += std::abs(u) * traj.dt_s;
  }
  for (const auto& s : traj.states)
    vel_max = std::max({vel_max, std::abs(s.qdot[0]), std::abs(s.qdot[1])});

  CriteriaResult r;
  r.criteria.x = {t_up, energy, tau_max, tau_integral, vel_max};
  r.criteria.k = cfg.k;

  // Success: up for the entire final window (and the trajectory covers it).
  const int window = static_cast<int>(std::llround(cfg.success_window_s / traj.dt_s));
  if (!traj.diverged && n_states > window) {
    bool ok = true;
    for (int k = n_states - 1 - window; k < n_states; ++k) ok = ok && up(traj.states[k]);
    r.c_succ = ok ? 1 : 0;
  }
  return r;
}

double performance_score(const ScoreCriteria& criteria, int c_succ) {
  if (c_succ != 0 && c_succ != 1) throw DomainError("performance_score: c_succ must be 0 or 1");
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) {
    if (!(criteria.k[i] > 0.0)) throw ConfigError("performance_score: scaling constants must be positive");
    if (criteria.x[i] < 0.0) throw DomainError("performance_score: criteria must be >= 0");
    acc += std::tanh(kPi * criteria.x[i] / criteria.k[i]);
  }
  return c_succ * (1.0 - acc / 5.0);
}

double final_score(double performance, double robustness) {
  if (performance < 0.0 || performance > 1.0 || robustness < 0.0 || robustness > 1.0)
    throw DomainError("final_score: inputs must lie in [0, 1]");
  return 0.5 * (performance + robustness);
}

std::string to_json(const ScoreReport& report) {
  nlohmann::json j;
  j["c_succ"] = report.c_succ;
  j["criteria"] = {{"swing_up_time_s", report.criteria.x[0]},
                   {"energy_J", report.criteria.x[1]},
                   {"max_torque_Nm", report.criteria.x[2]},
                   {"integrated_torque_Nms", report.criteria.x[3]},
                   {"max_velocity_radps", report.criteria.x[4]}};
  j["scaling_constants"] = report.criteria.k;
  j["performance_score"] = report.performance;
  j["robustness_score"] = report.robustness;
  j["final_score"] = report.final;
  return j.dump(2);
}

ScoreReport score_report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ScoreReport r;
  r.c_succ = j.at("c_succ").get<int>();
  const auto& c = j.at("criteria");
  r.criteria.x = {c.at("swing_up_time_s").get<double>(), c.at("energy_J").get<double>(),
                  c.at("max_torque_Nm").get<double>(), c.at("integrated_torque_Nms").get<double>(),
                  c.at("max_velocity_radps").get<double>()};
  const auto& k = j.at("scaling_constants");
  for (int i = 0; i < 5; ++i) r.criteria.k[i] = k.at(i).get<double>();
  r.performance = j.at("performance_score").get<double>();
  r.robustness = j.at("robustness_score").get<double>();
  r.final = j.at("final_score").get<double>();
  return r;
}

}  // namespace upswing::scoring
