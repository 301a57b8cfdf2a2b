#include "upswing/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "upswing/errors.hpp"

namespace upswing::harness {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + path + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError("config: unknown key '" + path + "." + key + "'");
  }
}

double num(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

int integer(const json& j, const char* key, int def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<int>();
}

bool boolean(const json& j, const char* key, bool def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<bool>();
}

std::string str(const json& j, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<std::string>();
}

void parse_physics(const json& j, ExperimentConfig& cfg) {
  if (cfg.system == sim::SystemId::Cartpole) {
    check_keys(j, "physics", {"cart_mass_kg", "pole_mass_kg", "pole_length_m", "gravity_mps2",
                              "cart_friction_Nspm", "u_max_N"});
    auto& p = cfg.env.cartpole;
    p.cart_mass_kg = num(j, "cart_mass_kg", p.cart_mass_kg);
    p.pole_mass_kg = num(j, "pole_mass_kg", p.pole_mass_kg);
    p.pole_length_m = num(j, "pole_length_m", p.pole_length_m);
    p.gravity_mps2 = num(j, "gravity_mps2", p.gravity_mps2);
    p.cart_friction_Nspm = num(j, "cart_friction_Nspm", p.cart_friction_Nspm);
    p.u_max_N = num(j, "u_max_N", p.u_max_N);
  } else {
    check_keys(j, "physics", {"m1_kg", "m2_kg", "l1_m", "l2_m", "r1_m", "r2_m", "I1_kgm2",
                              "I2_kgm2", "b1_Nms", "b2_Nms", "gravity_mps2", "tau_max_Nm"});
    auto& p = cfg.env.pendulum;
    p.m1_kg = num(j, "m1_kg", p.m1_kg);
    p.m2_kg = num(j, "m2_kg", p.m2_kg);
    p.l1_m = num(j, "l1_m", p.l1_m);
    p.l2_m = num(j, "l2_m", p.l2_m);
    p.r1_m = num(j, "r1_m", p.r1_m);
    p.r2_m = num(j, "r2_m", p.r2_m);
    p.I1_kgm2 = num(j, "I1_kgm2", p.I1_kgm2);
    p.I2_kgm2 = num(j, "I2_kgm2", p.I2_kgm2);
    p.b1_Nms = num(j, "b1_Nms", p.b1_Nms);
    p.b2_Nms = num(j, "b2_Nms", p.b2_Nms);
    p.gravity_mps2 = num(j, "gravity_mps2", p.gravity_mps2);
    p.tau_max_Nm = num(j, "tau_max_Nm", p.tau_max_Nm);
  }
}

void parse_env(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "env", {"dt_s", "substeps", "integrator", "state_bound", "horizon_s",
                        "eval_dt_s", "eval_horizon_s", "reset_noise", "obs_encoding",
                        "obs_vel_scale"});
  const std::string enc = str(j, "obs_encoding", "trig");
  if (enc == "trig") cfg.env.obs_encoding = sim::ObsEncoding::Trig;
  else if (enc == "wrapped") cfg.env.obs_encoding = sim::ObsEncoding::Wrapped;
  else throw ConfigError("config: unknown obs_encoding '" + enc + "'");
  auto& e = cfg.env;
  e.integrator.dt_s = num(j, "dt_s", e.integrator.dt_s);
  // Default substep count keeps the internal step near 2 ms at any control rate.
  const int default_substeps = std::max(1, static_cast<int>(std::llround(e.integrator.dt_s / 0.002)));
  e.integrator.substeps = integer(j, "substeps", default_substeps);
  const std::string method = str(j, "integrator", "rk4");
  if (method == "rk4") e.integrator.method = physics::IntegratorMethod::RK4;
  else if (method == "semi_implicit_euler") e.integrator.method = physics::IntegratorMethod::SemiImplicitEuler;
  else throw ConfigError("config: unknown integrator '" + method + "'");
  e.integrator.state_bound = num(j, "state_bound", e.integrator.state_bound);
  e.horizon_s = num(j, "horizon_s", e.horizon_s);
  cfg.eval_dt_s = num(j, "eval_dt_s", 0.0);
  cfg.eval_horizon_s = num(j, "eval_horizon_s", 0.0);
  e.reset_noise = num(j, "reset_noise", e.reset_noise);
  e.obs_vel_scale = num(j, "obs_vel_scale", e.obs_vel_scale);
}

void parse_reward(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "reward", {"alpha", "beta", "rho1", "rho2", "phi1", "phi2", "eta", "y_th_m"});
  auto& w = cfg.env.reward_weights;
  w.alpha = num(j, "alpha", w.alpha);
  w.beta = num(j, "beta", w.beta);
  w.rho1 = num(j, "rho1", w.rho1);
  w.rho2 = num(j, "rho2", w.rho2);
  w.phi1 = num(j, "phi1", w.phi1);
  w.phi2 = num(j, "phi2", w.phi2);
  w.eta = num(j, "eta", w.eta);
  w.y_th_m = num(j, "y_th_m", w.y_th_m);
}

void parse_rl(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "rl", {"algorithm", "episodes", "policy_hidden", "critic_hidden", "gamma", "lr",
                       "tau_polyak", "batch_size", "warmup_steps", "train_freq", "auto_alpha",
                       "alpha_init", "target_entropy", "buffer_capacity", "policy_delay",
                       "target_noise_std", "target_noise_clip", "exploration_noise_std",
                       "checkpoint_policy"});
  cfg.checkpoint_policy = str(j, "checkpoint_policy", cfg.checkpoint_policy);
  if (cfg.checkpoint_policy != "final" && cfg.checkpoint_policy != "best_eval")
    throw ConfigError("config: checkpoint_policy must be 'final' or 'best_eval'");
  auto& t = cfg.train;
  t.algorithm = rl::algorithm_from_string(str(j, "algorithm", "sac"));
  t.episodes = integer(j, "episodes", t.episodes);
  if (j.contains("policy_hidden")) t.policy_hidden = j.at("policy_hidden").get<std::vector<int>>();
  if (j.contains("critic_hidden")) t.critic_hidden = j.at("critic_hidden").get<std::vector<int>>();
  t.sac.gamma = num(j, "gamma", t.sac.gamma);
  t.sac.lr = num(j, "lr", t.sac.lr);
  t.sac.tau_polyak = num(j, "tau_polyak", t.sac.tau_polyak);
  t.sac.batch_size = integer(j, "batch_size", t.sac.batch_size);
  t.sac.warmup_steps = integer(j, "warmup_steps", t.sac.warmup_steps);
  t.sac.train_freq = integer(j, "train_freq", t.sac.train_freq);
  t.sac.auto_alpha = boolean(j, "auto_alpha", t.sac.auto_alpha);
  t.sac.alpha_init = num(j, "alpha_init", t.sac.alpha_init);
  t.sac.target_entropy = num(j, "target_entropy", t.sac.target_entropy);
  t.buffer_capacity = static_cast<std::size_t>(num(j, "buffer_capacity", static_cast<double>(t.buffer_capacity)));
  t.td3.policy_delay = integer(j, "policy_delay", t.td3.policy_delay);
  t.td3.target_noise_std = num(j, "target_noise_std", t.td3.target_noise_std);
  t.td3.target_noise_clip = num(j, "target_noise_clip", t.td3.target_noise_clip);
  t.td3.exploration_noise_std = num(j, "exploration_noise_std", t.td3.exploration_noise_std);
}

void parse_snes(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "snes", {"lambda", "sigma_init", "generations", "eta_mean", "eta_sigma",
                         "objective", "episodes_per_eval", "seed_policy", "noise_sigma",
                         "workers"});
  auto& s = cfg.snes;
  s.lambda = integer(j, "lambda", s.lambda);
  s.sigma_init = num(j, "sigma_init", s.sigma_init);
  s.generations = integer(j, "generations", s.generations);
  s.eta_mean = num(j, "eta_mean", s.eta_mean);
  s.eta_sigma = num(j, "eta_sigma", s.eta_sigma);
  s.workers = integer(j, "workers", s.workers);
  cfg.fitness.objective = evo::objective_from_string(
      str(j, "objective", evo::to_string(cfg.fitness.objective)));
  cfg.fitness.episodes_per_eval = integer(j, "episodes_per_eval", cfg.fitness.episodes_per_eval);
  const std::string sp = str(j, "seed_policy", "per_generation");
  if (sp == "per_generation") cfg.fitness.seed_policy = evo::EvalSeedPolicy::PerGeneration;
  else if (sp == "fixed") cfg.fitness.seed_policy = evo::EvalSeedPolicy::Fixed;
  else throw ConfigError("config: unknown seed_policy '" + sp + "'");
  cfg.snes_noise_sigma = num(j, "noise_sigma", cfg.snes_noise_sigma);
}

void parse_scoring(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "scoring", {"k_swing_up_time_s", "k_energy_J", "k_max_torque_Nm",
                            "k_integrated_torque_Nms", "k_max_velocity_radps",
                            "success_cone_rad", "success_window_s"});
  auto& c = cfg.criteria;
  c.k[0] = num(j, "k_swing_up_time_s", c.k[0]);
  c.k[1] = num(j, "k_energy_J", c.k[1]);
  c.k[2] = num(j, "k_max_torque_Nm", c.k[2]);
  c.k[3] = num(j, "k_integrated_torque_Nms", c.k[3]);
  c.k[4] = num(j, "k_max_velocity_radps", c.k[4]);
  c.success_cone_rad = num(j, "success_cone_rad", c.success_cone_rad);
  c.success_window_s = num(j, "success_window_s", c.success_window_s);
}

void parse_robustness(const json& j, ExperimentConfig& cfg) {
  check_keys(j, "robustness", {"params", "param_deltas", "action_noise_levels",
                               "measurement_noise_levels_rad", "episodes_per_variation"});
  auto& r = cfg.robustness;
  std::vector<std::string> params{"m1", "m2", "l1", "l2", "b1", "b2"};
  std::vector<double> deltas{-0.2, -0.1, 0.1, 0.2};
  std::vector<double> action_levels{0.05, 0.1};
  std::vector<double> meas_levels{0.01, 0.05};
  if (j.contains("params")) params = j.at("params").get<std::vector<std::string>>();
  if (j.contains("param_deltas")) deltas = j.at("param_deltas").get<std::vector<double>>();
  if (j.contains("action_noise_levels"))
    action_levels = j.at("action_noise_levels").get<std::vector<double>>();
  if (j.contains("measurement_noise_levels_rad"))
    meas_levels = j.at("measurement_noise_levels_rad").get<std::vector<double>>();
  r.variations.clear();
  for (const auto& p : params)
    for (double d : deltas)
      r.variations.push_back({scoring::Variation::Kind::Param, p, d});
  for (double level : action_levels)
    r.variations.push_back({scoring::Variation::Kind::ActionNoise, "", level});
  for (double level : meas_levels)
    r.variations.push_back({scoring::Variation::Kind::MeasurementNoise, "", level});
  r.episodes_per_variation = integer(j, "episodes_per_variation", r.episodes_per_variation);
  validate(r);
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, "", {"system", "output_dir", "seeds", "physics", "env", "reward", "rl", "snes",
                     "scoring", "robustness"});
  if (!j.contains("system")) throw ConfigError("config: missing required key 'system'");

  ExperimentConfig cfg;
  cfg.system = sim::system_from_string(j.at("system").get<std::string>());
  cfg.env.system = cfg.system;
  cfg.output_dir = str(j, "output_dir", cfg.output_dir);
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw ConfigError("config: seeds must be non-empty");
  }

  // System-dependent defaults before the file overrides them.
  if (cfg.system == sim::SystemId::Cartpole) {
    cfg.env.horizon_s = 3.0;
    cfg.fitness.objective = evo::Objective::NegSwingUpTime;
    cfg.snes.sigma_init = 0.02;
  } else {
    cfg.env.horizon_s = 10.0;
    cfg.fitness.objective = evo::Objective::PerformanceScore;
    cfg.snes.sigma_init = 0.01;
    cfg.env.reward_weights = scoring::default_reward_weights(
        cfg.system == sim::SystemId::Acrobot ? physics::Actuation::Acrobot
                                             : physics::Actuation::Pendubot);
  }

  if (j.contains("physics")) parse_physics(j.at("physics"), cfg);
  if (j.contains("env")) parse_env(j.at("env"), cfg);
  if (j.contains("reward")) parse_reward(j.at("reward"), cfg);
  if (j.contains("rl")) parse_rl(j.at("rl"), cfg);
  if (j.contains("snes")) parse_snes(j.at("snes"), cfg);
  cfg.criteria.k[2] = cfg.env.pendulum.tau_max_Nm;  // default k3 follows tau_max
  if (j.contains("scoring")) parse_scoring(j.at("scoring"), cfg);
  if (j.contains("robustness")) parse_robustness(j.at("robustness"), cfg);
  cfg.fitness.criteria = cfg.criteria;

  sim::validate(cfg.env);
  rl::validate(cfg.train.sac);
  rl::validate(cfg.train.td3);
  if (cfg.env.system != sim::SystemId::Cartpole &&
      !(std::abs(cfg.env.pendulum.l1_m + cfg.env.pendulum.l2_m) > 0.0))
    throw ConfigError("config: degenerate pendulum geometry");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return experiment_config_from_json(ss.str());
}

sim::EnvConfig eval_env(const ExperimentConfig& cfg) {
  sim::EnvConfig env = cfg.env;
  env.reset_noise = 0.0;
  env.action_noise_std = 0.0;
  env.obs_noise_std_rad = 0.0;
  env.start_state = physics::SystemState{};
  if (cfg.eval_dt_s > 0.0) {
    env.integrator.dt_s = cfg.eval_dt_s;
    env.integrator.substeps =
        std::max(1, static_cast<int>(std::llround(cfg.eval_dt_s / 0.002)));
  }
  if (cfg.eval_horizon_s > 0.0) env.horizon_s = cfg.eval_horizon_s;
  return env;
}

}  // namespace upswing::harness
