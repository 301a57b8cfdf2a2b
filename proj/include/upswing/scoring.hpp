#pragma once

#include <array>
#include <optional>
#include <string>

#include "upswing/physics.hpp"
#include "upswing/trajectory.hpp"

namespace upswing::scoring {

// Weights of the two-regime shaped reward for the double pendulum.
// Defaults: alpha=2, beta=1, rho1=0.1, rho2=0.02, phi1=0.15, phi2=0.15, eta=0.02,
// y_th 0.375 m (acrobot) / 0.35 m (pendubot).
struct DoublePendulumRewardWeights {
  double alpha = 2.0;   // upright alignment bonus weight
  double beta = 1.0;    // kinetic energy penalty (upper regime)
  double rho1 = 0.1;    // action penalty, upper regime
  double rho2 = 0.02;   // action penalty, lower regime
  double phi1 = 0.15;   // action smoothness penalty, upper regime
  double phi2 = 0.15;   // action smoothness penalty, lower regime
  double eta = 0.02;    // velocity penalty, lower regime
  double y_th_m = 0.375;
};

DoublePendulumRewardWeights default_reward_weights(physics::Actuation actuation);

// R = -|tip - tip_upright|; zero iff the tip is exactly at the upright target.
double cartpole_reward(const physics::SystemState& state, const physics::CartpoleParams& params);

// Shaped two-regime reward; action and prev_action are pre-scale in [-1, 1].
// The smoothness term uses |a - prev_a|.
double double_pendulum_reward(const physics::SystemState& state, double action,
                              double prev_action, const DoublePendulumRewardWeights& w,
                              const physics::DoublePendulumParams& params);

// Earliest time tau such that the pole tip stays within `radius` of the upright
// target for every sample at t >= tau. Absent when the final sample is outside
// (or the rollout diverged).
std::optional<double> swing_up_time(const sim::Trajectory& traj,
                                    const physics::CartpoleParams& params,
                                    double radius = 0.1);

// Five trajectory criteria with their scaling constants.
// x: [swing-up time s, energy J, max torque N*m, integrated |torque| N*m*s, max |qdot| rad/s]
struct ScoreCriteria {
  std::array<double, 5> x{};
  std::array<double, 5> k{10.0, 100.0, 3.0, 20.0, 50.0};
};

// Thresholds used when reducing a trajectory to criteria.
struct CriteriaConfig {
  std::array<double, 5> k{10.0, 100.0, 3.0, 20.0, 50.0};
  double success_cone_rad = 0.2;  // end-effector above (l1+l2)*cos(cone) counts as up
  double success_window_s = 1.0;  // must stay up for the entire final window
};

struct CriteriaResult {
  ScoreCriteria criteria;
  int c_succ = 0;
};

// Reduce a double-pendulum trajectory to the five criteria plus the success flag.
// Swing-up time is the height version: first tau with y_t above the cone height
// for all t >= tau (full duration when never reached).
CriteriaResult extract_criteria(const sim::Trajectory& traj,
                                const physics::DoublePendulumParams& params,
                                const CriteriaConfig& cfg);

// S = c_succ * (1 - 1/5 * sum tanh(pi * x_i / k_i)); in [0, c_succ], strictly
// decreasing in each x_i when c_succ = 1.
double performance_score(const ScoreCriteria& criteria, int c_succ);

// Arithmetic mean of the performance and robustness scores.
double final_score(double performance, double robustness);

struct ScoreReport {
  int c_succ = 0;
  ScoreCriteria criteria;
  double performance = 0.0;
  double robustness = 1.0;
  double final = 0.0;
};

std::string to_json(const ScoreReport& report);
ScoreReport score_report_from_json(const std::string& text);

}  // namespace upswing::scoring
