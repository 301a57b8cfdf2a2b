#include "upswing/rl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "upswing/errors.hpp"
#include "upswing/scoring.hpp"

namespace upswing::rl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay buffer: capacity must be positive");
  storage_.reserve(std::min<std::size_t>(capacity_, 1 << 20));
}

void ReplayBuffer::add(const Transition& t) {
  if (!std::isfinite(t.reward)) throw DomainError("replay buffer: non-finite reward");
  if (storage_.size() < capacity_) {
    storage_.push_back(t);
  } else {
    storage_[next_] = t;
  }
  next_ = (next_ + 1) % capacity_;
  ++inserted_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(int n, Rng& rng) const {
  if (storage_.empty()) throw DomainError("replay buffer: sampling from empty buffer");
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.next_below(storage_.size());
  return idx;
}

Adam::Adam(std::size_t n, double lr_) : lr(lr_), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(nn::ParamVector& params, const nn::ParamVector& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw ConfigError("adam: size mismatch");
  ++t_;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, t_);
  const double c2 = 1.0 - std::pow(b2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
}

void Adam::step(double& param, double grad) {
  if (m_.size() != 1) throw ConfigError("adam: scalar step needs size-1 state");
  nn::ParamVector p{param}, g{grad};
  step(p, g);
  param = p[0];
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SAC: return "sac";
    case Algorithm::TD3: return "td3";
    case Algorithm::DDPG: return "ddpg";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "sac") return Algorithm::SAC;
  if (name == "td3") return Algorithm::TD3;
  if (name == "ddpg") return Algorithm::DDPG;
  throw ConfigError("unknown algorithm '" + name + "'");
}

void validate(const SacConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw ConfigError("rl: gamma must be in [0,1)");
  if (!(cfg.tau_polyak > 0.0 && cfg.tau_polyak < 1.0))
    throw ConfigError("rl: tau_polyak must be in (0,1)");
  if (cfg.lr < 0.0) throw ConfigError("rl: lr must be >= 0");
  if (cfg.batch_size < 1 || cfg.warmup_steps < 0 || cfg.train_freq < 1)
    throw ConfigError("rl: batch/warmup/train_freq out of range");
  if (!cfg.auto_alpha && !(cfg.alpha_init >= 0.0))
    throw ConfigError("rl: fixed alpha must be >= 0");
}

void validate(const Td3Config& cfg) {
  if (cfg.policy_delay < 1) throw ConfigError("td3: policy_delay must be >= 1");
  if (cfg.target_noise_std < 0.0 || cfg.target_noise_clip <= 0.0 ||
      cfg.exploration_noise_std < 0.0)
    throw ConfigError("td3: noise settings out of range");
}

double Agent::alpha() const { return std::exp(log_alpha); }

Agent make_agent(Algorithm algorithm, int obs_dim, int action_dim, double action_scale,
                 const std::vector<int>& policy_hidden, const std::vector<int>& critic_hidden,
                 const SacConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Agent a;
  a.algorithm = algorithm;
  if (algorithm == Algorithm::SAC) {
    a.actor = policy::make_gaussian_policy(obs_dim, policy_hidden, action_dim, action_scale,
                                           mix_seed(seed, 1));
  } else {
    a.actor = policy::make_deterministic_policy(obs_dim, policy_hidden, action_dim,
                                                action_scale, mix_seed(seed, 1));
    a.actor_target = a.actor.params;
  }
  a.critic_arch.input_dim = obs_dim + action_dim;
  a.critic_arch.hidden_sizes = critic_hidden;
  a.critic_arch.output_dim = 1;
  a.critic_arch.hidden_activation = nn::Activation::ReLU;
  a.q1 = nn::init_params(a.critic_arch, mix_seed(seed, 2));
  a.q2 = nn::init_params(a.critic_arch, mix_seed(seed, 3));
  a.q1_target = a.q1;
  a.q2_target = a.q2;
  a.log_alpha = std::log(std::max(cfg.alpha_init, 1e-8));
  a.opt_actor = Adam(a.actor.params.size(), cfg.lr);
  a.opt_q1 = Adam(a.q1.size(), cfg.lr);
  a.opt_q2 = Adam(a.q2.size(), cfg.lr);
  a.opt_alpha = Adam(1, cfg.lr);
  return a;
}

void polyak_update(nn::ParamVector& target, const nn::ParamVector& online, double tau) {
  if (target.size() != online.size()) throw ConfigError("polyak: size mismatch");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = tau * online[i] + (1.0 - tau) * target[i];
}

namespace {

struct Batch {
  nn::Matrix obs;       // B x obs_dim
  nn::Matrix next_obs;  // B x obs_dim
  Eigen::VectorXd action, reward, not_done;
};

Batch assemble(const std::vector<Transition>& transitions, int obs_dim) {
  const int b = static_cast<int>(transitions.size());
  Batch batch;
  batch.obs.resize(b, obs_dim);
  batch.next_obs.resize(b, obs_dim);
  batch.action.resize(b);
  batch.reward.resize(b);
  batch.not_done.resize(b);
  for (int i = 0; i < b; ++i) {
    const Transition& t = transitions[i];
    for (int j = 0; j < obs_dim; ++j) {
      batch.obs(i, j) = t.obs.data[j];
      batch.next_obs(i, j) = t.next_obs.data[j];
    }
    batch.action(i) = t.action;
    batch.reward(i) = t.reward;
    batch.not_done(i) = t.done ? 0.0 : 1.0;
  }
  return batch;
}

std::vector<Transition> draw_batch(const ReplayBuffer& buffer, int n, Rng& rng) {
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i : buffer.sample_indices(n, rng)) out.push_back(buffer.at(i));
  return out;
}

nn::Matrix with_action(const nn::Matrix& obs, const Eigen::VectorXd& action) {
  nn::Matrix x(obs.rows(), obs.cols() + 1);
  x.leftCols(obs.cols()) = obs;
  x.col(obs.cols()) = action;
  return x;
}

// Fresh reparameterized actions from the Gaussian actor head.
struct ActorSamples {
  Eigen::VectorXd mu, log_std, eps, u, a, log_prob;
};

ActorSamples sample_from_head(const nn::Matrix& head, const policy::Policy& actor, Rng& rng) {
  const int b = static_cast<int>(head.rows());
  ActorSamples s;
  s.mu = head.col(0);
  s.log_std = head.col(1).cwiseMax(actor.log_std_min).cwiseMin(actor.log_std_max);
  s.eps.resize(b);
  for (int i = 0; i < b; ++i) s.eps(i) = rng.normal();
  s.u.resize(b);
  s.a.resize(b);
  for (int i = 0; i < b; ++i) {
    s.u(i) = s.mu(i) + std::exp(s.log_std(i)) * s.eps(i);
    s.a(i) = std::tanh(s.u(i));
  }
  s.log_prob.resize(b);
  for (int i = 0; i < b; ++i) {
    // Unit-action density: the actuator-scale offset is constant and irrelevant here.
    s.log_prob(i) = -0.5 * s.eps(i) * s.eps(i) - s.log_std(i) - 0.5 * kLog2Pi -
                    policy::log_one_minus_tanh_sq(s.u(i));
  }
  return s;
}

void check_finite(double v, const char* what, const Agent& agent) {
  if (std::isfinite(v)) return;
  std::ostringstream oss;
  oss << "non-finite " << what << " in " << to_string(agent.algorithm)
      << " update " << agent.update_count << " (alpha=" << agent.alpha() << ")";
  throw TrainingError(oss.str());
}

// One critic regression step; returns the mean squared TD error.
double critic_step(Agent& agent, nn::ParamVector& q, Adam& opt, const nn::Matrix& input,
                   const Eigen::VectorXd& targets) {
  auto [pred, tape] = nn::forward_batch_tape(agent.critic_arch, q, input);
  const Eigen::VectorXd err = pred.col(0) - targets;
  const double loss = err.squaredNorm() / err.size();
  nn::Matrix cot = (2.0 / err.size()) * err;
  nn::Gradients g = nn::backward(tape, cot);
  opt.step(q, g.param_grad);
  return loss;
}

}  // namespace

Eigen::VectorXd critic_targets(const Agent& agent, const std::vector<Transition>& batch,
                               const SacConfig& cfg, const Td3Config& td3, Rng& rng) {
  const int obs_dim = agent.actor.arch.input_dim;
  const Batch b = assemble(batch, obs_dim);
  const int n = static_cast<int>(batch.size());

  Eigen::VectorXd next_q(n);
  if (agent.algorithm == Algorithm::SAC) {
    const nn::Matrix head = nn::forward_batch(agent.actor.arch, agent.actor.params, b.next_obs);
    const ActorSamples s = sample_from_head(head, agent.actor, rng);
    const nn::Matrix in = with_action(b.next_obs, s.a);
    const nn::Matrix q1 = nn::forward_batch(agent.critic_arch, agent.q1_target, in);
    const nn::Matrix q2 = nn::forward_batch(agent.critic_arch, agent.q2_target, in);
    next_q = q1.col(0).cwiseMin(q2.col(0)) - agent.alpha() * s.log_prob;
  } else {
    const nn::Matrix out =
        nn::forward_batch(agent.actor.arch, agent.actor_target, b.next_obs);
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a(i) = std::tanh(out(i, 0));
    if (agent.algorithm == Algorithm::TD3 && td3.target_noise_std > 0.0) {
      for (int i = 0; i < n; ++i) {
        const double noise = std::clamp(td3.target_noise_std * rng.normal(),
                                        -td3.target_noise_clip, td3.target_noise_clip);
        a(i) = std::clamp(a(i) + noise, -1.0, 1.0);
      }
    }
    const nn::Matrix in = with_action(b.next_obs, a);
    const nn::Matrix q1 = nn::forward_batch(agent.critic_arch, agent.q1_target, in);
    if (agent.algorithm == Algorithm::TD3) {
      const nn::Matrix q2 = nn::forward_batch(agent.critic_arch, agent.q2_target, in);
      next_q = q1.col(0).cwiseMin(q2.col(0));
    } else {
      next_q = q1.col(0);
    }
  }
  return b.reward + cfg.gamma * b.not_done.cwiseProduct(next_q);
}

UpdateDiagnostics sac_update(Agent& agent, const ReplayBuffer& buffer, const SacConfig& cfg,
                             Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg.batch_size))
    throw DomainError("sac_update: buffer smaller than batch");
  const std::vector<Transition> transitions = draw_batch(buffer, cfg.batch_size, rng);
  const int obs_dim = agent.actor.arch.input_dim;
  const Batch b = assemble(transitions, obs_dim);
  const int n = cfg.batch_size;

  const Eigen::VectorXd y = critic_targets(agent, transitions, cfg, Td3Config{}, rng);

  const nn::Matrix critic_in = with_action(b.obs, b.action);
  const double l1 = critic_step(agent, agent.q1, agent.opt_q1, critic_in, y);
  const double l2 = critic_step(agent, agent.q2, agent.opt_q2, critic_in, y);

  // Actor: minimize alpha log pi - min Q over reparameterized fresh actions.
  auto [head, actor_tape] = nn::forward_batch_tape(agent.actor.arch, agent.actor.params, b.obs);
  const ActorSamples s = sample_from_head(head, agent.actor, rng);
  const nn::Matrix actor_in = with_action(b.obs, s.a);
  auto [q1n, t1] = nn::forward_batch_tape(agent.critic_arch, agent.q1, actor_in);
  auto [q2n, t2] = nn::forward_batch_tape(agent.critic_arch, agent.q2, actor_in);

  nn::Matrix cot1 = nn::Matrix::Zero(n, 1);
  nn::Matrix cot2 = nn::Matrix::Zero(n, 1);
  for (int i = 0; i < n; ++i) {
    if (q1n(i, 0) <= q2n(i, 0)) cot1(i, 0) = 1.0;
    else cot2(i, 0) = 1.0;
  }
  const Eigen::VectorXd dq_da = (nn::backward_input_only(t1, cot1).col(obs_dim) +
                                 nn::backward_input_only(t2, cot2).col(obs_dim));

  const double alpha = agent.alpha();
  const Eigen::VectorXd qmin = q1n.col(0).cwiseMin(q2n.col(0));
  const double actor_loss = (alpha * s.log_prob - qmin).mean();

  nn::Matrix head_cot(n, 2);
  for (int i = 0; i < n; ++i) {
    const double sigma_eps = std::exp(s.log_std(i)) * s.eps(i);
    const double dtanh = 1.0 - s.a(i) * s.a(i);
    const double dlp_dmu = 2.0 * s.a(i);
    const double dlp_dls = -1.0 + 2.0 * s.a(i) * sigma_eps;
    head_cot(i, 0) = (alpha * dlp_dmu - dq_da(i) * dtanh) / n;
    head_cot(i, 1) = (alpha * dlp_dls - dq_da(i) * dtanh * sigma_eps) / n;
  }
  nn::Gradients ag = nn::backward(actor_tape, head_cot);
  agent.opt_actor.step(agent.actor.params, ag.param_grad);

  UpdateDiagnostics d;
  d.critic_loss = 0.5 * (l1 + l2);
  d.actor_loss = actor_loss;
  d.entropy = -s.log_prob.mean();
  d.actor_updated = true;

  if (cfg.auto_alpha) {
    const double target_entropy =
        cfg.target_entropy != 0.0 ? cfg.target_entropy : -agent.actor.action_dim();
    // d/dlog_alpha of -alpha (log pi + target entropy), alpha treated via exp(log_alpha)
    const double grad = -(s.log_prob.array() + target_entropy).mean() * agent.alpha();
    agent.opt_alpha.step(agent.log_alpha, grad);
  }
  d.alpha = agent.alpha();

  check_finite(d.critic_loss, "critic loss", agent);
  check_finite(d.actor_loss, "actor loss", agent);
  check_finite(d.alpha, "alpha", agent);

  polyak_update(agent.q1_target, agent.q1, cfg.tau_polyak);
  polyak_update(agent.q2_target, agent.q2, cfg.tau_polyak);
  ++agent.update_count;
  return d;
}

namespace {

struct ActorLossGrad {
  double loss = 0.0;
  nn::ParamVector grad;
};

// Loss and gradient of -mean Q1(s, tanh(net(s))) for deterministic actors.
ActorLossGrad deterministic_actor_grad(const Agent& agent, const Batch& b, int n) {
  const int obs_dim = agent.actor.arch.input_dim;
  auto [out, actor_tape] = nn::forward_batch_tape(agent.actor.arch, agent.actor.params, b.obs);
  Eigen::VectorXd a(n);
  for (int i = 0; i < n; ++i) a(i) = std::tanh(out(i, 0));
  const nn::Matrix actor_in = with_action(b.obs, a);
  auto [q, qtape] = nn::forward_batch_tape(agent.critic_arch, agent.q1, actor_in);

  nn::Matrix cot = nn::Matrix::Constant(n, 1, 1.0);
  const Eigen::VectorXd dq_da = nn::backward_input_only(qtape, cot).col(obs_dim);
  nn::Matrix out_cot(n, 1);
  for (int i = 0; i < n; ++i)
    out_cot(i, 0) = -dq_da(i) * (1.0 - a(i) * a(i)) / n;
  nn::Gradients ag = nn::backward(actor_tape, out_cot);
  return {-q.col(0).mean(), std::move(ag.param_grad)};
}

double deterministic_actor_step(Agent& agent, const Batch& b, int n) {
  const ActorLossGrad lg = deterministic_actor_grad(agent, b, n);
  agent.opt_actor.step(agent.actor.params, lg.grad);
  return lg.loss;
}

}  // namespace

nn::ParamVector actor_gradient(const Agent& agent, const std::vector<Transition>& batch) {
  if (agent.algorithm == Algorithm::SAC)
    throw ConfigError("actor_gradient: defined for the deterministic actors");
  const Batch b = assemble(batch, agent.actor.arch.input_dim);
  return deterministic_actor_grad(agent, b, static_cast<int>(batch.size())).grad;
}

UpdateDiagnostics td3_update(Agent& agent, const ReplayBuffer& buffer, const SacConfig& cfg,
                             const Td3Config& td3, Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg.batch_size))
    throw DomainError("td3_update: buffer smaller than batch");
  validate(td3);
  const std::vector<Transition> transitions = draw_batch(buffer, cfg.batch_size, rng);
  const int obs_dim = agent.actor.arch.input_dim;
  const Batch b = assemble(transitions, obs_dim);

  const Eigen::VectorXd y = critic_targets(agent, transitions, cfg, td3, rng);
  const nn::Matrix critic_in = with_action(b.obs, b.action);
  const double l1 = critic_step(agent, agent.q1, agent.opt_q1, critic_in, y);
  const double l2 = critic_step(agent, agent.q2, agent.opt_q2, critic_in, y);

  UpdateDiagnostics d;
  d.critic_loss = 0.5 * (l1 + l2);
  d.alpha = 0.0;

  ++agent.update_count;
  if (agent.update_count % td3.policy_delay == 0) {
    d.actor_loss = deterministic_actor_step(agent, b, cfg.batch_size);
    d.actor_updated = true;
    polyak_update(agent.actor_target, agent.actor.params, cfg.tau_polyak);
    polyak_update(agent.q1_target, agent.q1, cfg.tau_polyak);
    polyak_update(agent.q2_target, agent.q2, cfg.tau_polyak);
  }

  check_finite(d.critic_loss, "critic loss", agent);
  if (d.actor_updated) check_finite(d.actor_loss, "actor loss", agent);
  return d;
}

UpdateDiagnostics ddpg_update(Agent& agent, const ReplayBuffer& buffer, const SacConfig& cfg,
                              Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg.batch_size))
    throw DomainError("ddpg_update: buffer smaller than batch");
  const std::vector<Transition> transitions = draw_batch(buffer, cfg.batch_size, rng);
  const int obs_dim = agent.actor.arch.input_dim;
  const Batch b = assemble(transitions, obs_dim);

  const Eigen::VectorXd y = critic_targets(agent, transitions, cfg, Td3Config{}, rng);
  const nn::Matrix critic_in = with_action(b.obs, b.action);
  const double l1 = critic_step(agent, agent.q1, agent.opt_q1, critic_in, y);

  UpdateDiagnostics d;
  d.critic_loss = l1;
  d.actor_loss = deterministic_actor_step(agent, b, cfg.batch_size);
  d.actor_updated = true;
  d.alpha = 0.0;

  check_finite(d.critic_loss, "critic loss", agent);
  check_finite(d.actor_loss, "actor loss", agent);

  polyak_update(agent.actor_target, agent.actor.params, cfg.tau_polyak);
  polyak_update(agent.q1_target, agent.q1, cfg.tau_polyak);
  ++agent.update_count;
  return d;
}

namespace {

std::optional<double> eval_swing_up_time(const sim::Trajectory& traj,
                                         const sim::EnvConfig& cfg) {
  if (cfg.system == sim::SystemId::Cartpole)
    return scoring::swing_up_time(traj, cfg.cartpole);
  const auto r = scoring::extract_criteria(traj, cfg.pendulum_params(), scoring::CriteriaConfig{});
  if (r.criteria.x[0] >= traj.duration_s()) return std::nullopt;
  return r.criteria.x[0];
}

}  // namespace

TrainResult train(const sim::EnvConfig& env_cfg, const TrainConfig& cfg, std::uint64_t seed,
                  const EpisodeCallback& on_episode) {
  sim::validate(env_cfg);
  validate(cfg.sac);
  validate(cfg.td3);

  sim::EnvConfig eval_cfg = cfg.eval_env.value_or(env_cfg);  // deterministic evaluation env
  eval_cfg.reset_noise = 0.0;
  eval_cfg.action_noise_std = 0.0;
  eval_cfg.obs_noise_std_rad = 0.0;
  if (eval_cfg.obs_dim() != env_cfg.obs_dim() || eval_cfg.action_scale() != env_cfg.action_scale())
    throw ConfigError("train: evaluation environment is incompatible with the training one");

  Agent agent = make_agent(cfg.algorithm, env_cfg.obs_dim(), 1, env_cfg.action_scale(), cfg.policy_hidden,
                           cfg.critic_hidden, cfg.sac, mix_seed(seed, 11));
  ReplayBuffer buffer(cfg.buffer_capacity);
  sim::Environment env(env_cfg, mix_seed(seed, 12));
  Rng explore_rng(mix_seed(seed, 13));
  Rng update_rng(mix_seed(seed, 14));

  TrainResult result;
  result.best_policy = agent.actor;
  const int steps_per_episode = env_cfg.steps_per_episode();
  long total_steps = 0;
  UpdateDiagnostics last_diag;
  last_diag.alpha = agent.alpha();

  // Lexicographic: a finite swing-up time beats none, earlier beats later,
  // then the higher evaluation return wins.
  std::optional<double> best_ts;
  double best_return = -std::numeric_limits<double>::infinity();
  const auto improves = [&](const EpisodeRecord& r) {
    if (r.eval_swing_up_time_s.has_value() != best_ts.has_value())
      return r.eval_swing_up_time_s.has_value();
    if (r.eval_swing_up_time_s && *r.eval_swing_up_time_s != *best_ts)
      return *r.eval_swing_up_time_s < *best_ts;
    return r.eval_return > best_return;
  };

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    env.reset();
    double train_return = 0.0;
    bool diverged = false;

    for (int k = 0; k < steps_per_episode; ++k) {
      const sim::Observation obs = env.observation();
      double a_unit;
      if (total_steps < cfg.sac.warmup_steps) {
        a_unit = explore_rng.uniform(-1.0, 1.0);
      } else if (cfg.algorithm == Algorithm::SAC) {
        const auto s = policy::sample_action(agent.actor, obs, explore_rng);
        a_unit = s.action[0] / agent.actor.action_scale;
      } else {
        const double greedy = policy::greedy_action(agent.actor, obs)[0] /
                              agent.actor.action_scale;
        a_unit = std::clamp(greedy + cfg.td3.exploration_noise_std * explore_rng.normal(),
                            -1.0, 1.0);
      }

      if (!std::isfinite(a_unit)) {
        result.policy = agent.actor;
        result.aborted = true;
        result.abort_reason = "non-finite action from the policy at step " +
                              std::to_string(total_steps);
        return result;
      }

      const sim::StepResult sr = env.step(a_unit);
      ++total_steps;
      if (sr.diverged) {
        diverged = true;  // drop the failed step, end the episode
        break;
      }
      train_return += sr.reward;

      Transition t;
      t.obs = obs;
      t.action = a_unit;
      t.reward = sr.reward;
      t.next_obs = sim::observe(env_cfg, sr.state);
      t.done = false;
      buffer.add(t);

      if (total_steps >= cfg.sac.warmup_steps && total_steps % cfg.sac.train_freq == 0 &&
          buffer.size() >= static_cast<std::size_t>(cfg.sac.batch_size)) {
        try {
          switch (cfg.algorithm) {
            case Algorithm::SAC: last_diag = sac_update(agent, buffer, cfg.sac, update_rng); break;
            case Algorithm::TD3:
              last_diag = td3_update(agent, buffer, cfg.sac, cfg.td3, update_rng);
              break;
            case Algorithm::DDPG:
              last_diag = ddpg_update(agent, buffer, cfg.sac, update_rng);
              break;
          }
        } catch (const TrainingError& e) {
          result.policy = agent.actor;
          result.aborted = true;
          result.abort_reason = e.what();
          return result;
        }
      }
    }

    sim::RolloutOptions eval_opt;
    eval_opt.mode = sim::ControlMode::Greedy;
    eval_opt.seed = mix_seed(seed, 1000 + static_cast<std::uint64_t>(episode));
    const sim::Trajectory eval_traj = sim::rollout(agent.actor, eval_cfg, eval_opt);

    EpisodeRecord rec;
    rec.episode = episode;
    rec.train_return = train_return;
    double eval_return = 0.0;
    for (double r : eval_traj.rewards) eval_return += r;
    rec.eval_return = eval_return;
    rec.eval_swing_up_time_s = eval_swing_up_time(eval_traj, eval_cfg);
    rec.critic_loss = last_diag.critic_loss;
    rec.actor_loss = last_diag.actor_loss;
    rec.entropy = last_diag.entropy;
    rec.alpha = last_diag.alpha;
    rec.diverged = diverged;
    if (improves(rec)) {
      best_ts = rec.eval_swing_up_time_s;
      best_return = rec.eval_return;
      result.best_policy = agent.actor;
      result.best_episode = episode;
    }
    result.log.push_back(rec);
    if (on_episode) on_episode(rec);
  }

  result.policy = agent.actor;
  return result;
}

}  // namespace upswing::rl
