#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "upswing/nn.hpp"
#include "upswing/policy.hpp"
#include "upswing/rng.hpp"
#include "upswing/sim.hpp"

namespace upswing::rl {

// One step of experience. Actions are pre-scale, in [-1, 1].
struct Transition {
  sim::Observation obs;
  double action = 0.0;
  double reward = 0.0;
  sim::Observation next_obs;
  bool done = false;  // divergence only; horizon ends keep bootstrapping
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(const Transition& t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }
  const Transition& at(std::size_t i) const { return storage_[i]; }

  // Uniform with replacement over the stored items.
  std::vector<std::size_t> sample_indices(int n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t next_ = 0;
  std::uint64_t inserted_ = 0;
};

// Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr);

  void step(nn::ParamVector& params, const nn::ParamVector& grad);
  void step(double& param, double grad);  // scalar variant (temperature)

  double lr = 1e-3;

 private:
  std::vector<double> m_, v_;
  long t_ = 0;
};

enum class Algorithm { SAC, TD3, DDPG };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct SacConfig {
  double gamma = 0.99;
  double lr = 1e-3;
  double tau_polyak = 0.005;
  int batch_size = 256;
  int warmup_steps = 1000;
  int train_freq = 1;
  bool auto_alpha = true;
  double alpha_init = 0.2;
  double target_entropy = 0.0;  // 0 -> default -action_dim
};

struct Td3Config {
  int policy_delay = 2;
  double target_noise_std = 0.2;
  double target_noise_clip = 0.5;
  double exploration_noise_std = 0.1;
};

void validate(const SacConfig& cfg);
void validate(const Td3Config& cfg);

// Actor, critics, their targets and optimizer state for one agent.
struct Agent {
  Algorithm algorithm = Algorithm::SAC;
  policy::Policy actor;
  nn::ParamVector actor_target;  // TD3/DDPG only
  nn::MlpArchitecture critic_arch;
  nn::ParamVector q1, q2, q1_target, q2_target;  // DDPG uses q1 only
  double log_alpha = 0.0;
  Adam opt_actor, opt_q1, opt_q2, opt_alpha;
  long update_count = 0;

  double alpha() const;
};

Agent make_agent(Algorithm algorithm, int obs_dim, int action_dim, double action_scale,
                 const std::vector<int>& policy_hidden, const std::vector<int>& critic_hidden,
                 const SacConfig& cfg, std::uint64_t seed);

struct UpdateDiagnostics {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;  // mean -log pi of the fresh actor samples (SAC)
  double alpha = 0.0;
  bool actor_updated = false;
};

// Critic regression targets for one sampled batch; exposed for testing.
// SAC: r + gamma (1-done) (min_i Qt_i(s', a') - alpha log pi(a'|s')), a' ~ pi.
// TD3: r + gamma (1-done) min_i Qt_i(s', clamp(pi_t(s') + clipped noise)).
// DDPG: r + gamma (1-done) Qt_1(s', pi_t(s')).
Eigen::VectorXd critic_targets(const Agent& agent, const std::vector<Transition>& batch,
                               const SacConfig& cfg, const Td3Config& td3, Rng& rng);

// Gradient of the deterministic-actor loss -mean_i Q1(s_i, tanh(actor(s_i)))
// with respect to the actor parameters (TD3/DDPG improvement direction).
nn::ParamVector actor_gradient(const Agent& agent, const std::vector<Transition>& batch);

UpdateDiagnostics sac_update(Agent& agent, const ReplayBuffer& buffer, const SacConfig& cfg,
                             Rng& rng);
UpdateDiagnostics td3_update(Agent& agent, const ReplayBuffer& buffer, const SacConfig& cfg,
                             const Td3Config& td3, Rng& rng);
UpdateDiagnostics ddpg_update(Agent& agent, const ReplayBuffer& buffer, const SacConfig& cfg,
                              Rng& rng);

// target <- tau * online + (1 - tau) * target
void polyak_update(nn::ParamVector& target, const nn::ParamVector& online, double tau);

struct TrainConfig {
  Algorithm algorithm = Algorithm::SAC;
  int episodes = 500;
  std::vector<int> policy_hidden{64, 64};
  std::vector<int> critic_hidden{128, 128};
  SacConfig sac;
  Td3Config td3;
  std::size_t buffer_capacity = 1'000'000;
  // Environment for the per-episode greedy evaluation; defaults to the training
  // environment with reset/action/measurement noise stripped.
  std::optional<sim::EnvConfig> eval_env;
};

struct EpisodeRecord {
  int episode = 0;
  double train_return = 0.0;
  double eval_return = 0.0;
  std::optional<double> eval_swing_up_time_s;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;
  double alpha = 0.0;
  bool diverged = false;
};

struct TrainResult {
  policy::Policy policy;  // after the final episode
  // Snapshot with the best greedy evaluation seen during training (earliest
  // finite swing-up time, ties by evaluation return).
  policy::Policy best_policy;
  int best_episode = -1;
  std::vector<EpisodeRecord> log;
  bool aborted = false;
  std::string abort_reason;
};

using EpisodeCallback = std::function<void(const EpisodeRecord&)>;

// Full training loop: explore, store, update after warmup, greedy-evaluate each
// episode. Pure function of (env_cfg, cfg, seed). A NaN loss aborts the run and
// returns the partial log with aborted = true.
TrainResult train(const sim::EnvConfig& env_cfg, const TrainConfig& cfg, std::uint64_t seed,
                  const EpisodeCallback& on_episode = {});

}  // namespace upswing::rl
