#include "upswing/robustness.hpp"

#include <algorithm>
#include <thread>

#include "upswing/errors.hpp"

namespace upswing::scoring {

RobustnessConfig default_robustness_config() {
  RobustnessConfig cfg;
  for (const char* param : {"m1", "m2", "l1", "l2", "b1", "b2"}) {
    for (double delta : {-0.2, -0.1, 0.1, 0.2}) {
      cfg.variations.push_back({Variation::Kind::Param, param, delta});
    }
  }
  for (double level : {0.05, 0.1})
    cfg.variations.push_back({Variation::Kind::ActionNoise, "", level});
  for (double level : {0.01, 0.05})
    cfg.variations.push_back({Variation::Kind::MeasurementNoise, "", level});
  return cfg;
}

void validate(const RobustnessConfig& cfg) {
  if (cfg.episodes_per_variation < 1)
    throw ConfigError("robustness: episodes_per_variation must be >= 1");
  for (const Variation& v : cfg.variations) {
    if (v.kind == Variation::Kind::Param) {
      if (v.value <= -0.9 || v.value >= 10.0)
        throw ConfigError("robustness: relative deltas must lie in (-0.9, 10)");
      const std::string& p = v.param;
      if (p != "m1" && p != "m2" && p != "l1" && p != "l2" && p != "b1" && p != "b2")
        throw ConfigError("robustness: unknown parameter '" + p + "'");
    } else if (v.value < 0.0) {
      throw ConfigError("robustness: noise levels must be >= 0");
    }
  }
}

namespace {

sim::EnvConfig perturb(const sim::EnvConfig& base, const Variation& v) {
  sim::EnvConfig env = base;
  switch (v.kind) {
    case Variation::Kind::Param: {
      physics::DoublePendulumParams& p = env.pendulum;
      const double f = 1.0 + v.value;
      if (v.param == "m1") p.m1_kg *= f;
      else if (v.param == "m2") p.m2_kg *= f;
      else if (v.param == "l1") { p.l1_m *= f; p.r1_m *= f; p.I1_kgm2 *= f * f; }
      else if (v.param == "l2") { p.l2_m *= f; p.r2_m *= f; p.I2_kgm2 *= f * f; }
      else if (v.param == "b1") p.b1_Nms *= f;
      else if (v.param == "b2") p.b2_Nms *= f;
      break;
    }
    case Variation::Kind::ActionNoise:
      env.action_noise_std = v.value * env.action_scale();
      break;
    case Variation::Kind::MeasurementNoise:
      env.obs_noise_std_rad = v.value;
      break;
  }
  return env;
}

}  // namespace

RobustnessResult robustness_score(const policy::Policy& p, const sim::EnvConfig& env,
                                  const RobustnessConfig& cfg, const CriteriaConfig& criteria,
                                  std::uint64_t seed, int workers) {
  validate(cfg);
  if (env.system == sim::SystemId::Cartpole)
    throw ConfigError("robustness battery is defined for the double pendulum systems");

  RobustnessResult result;
  result.outcomes.resize(cfg.variations.size());
  if (cfg.variations.empty()) return result;  // vacuous battery scores 1

  const auto evaluate = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Variation& v = cfg.variations[k];
      const sim::EnvConfig perturbed = perturb(env, v);
      bool success = true;
      for (int e = 0; e < cfg.episodes_per_variation && success; ++e) {
        sim::RolloutOptions opt;
        opt.mode = sim::ControlMode::Greedy;
        opt.seed = mix_seed(mix_seed(seed, k), static_cast<std::uint64_t>(e));
        const sim::Trajectory traj = sim::rollout(p, perturbed, opt);
        if (traj.diverged) {
          success = false;
          break;
        }
        const CriteriaResult cr = extract_criteria(traj, perturbed.pendulum_params(), criteria);
        success = cr.c_succ == 1;
      }
      result.outcomes[k] = {v, success};
    }
  };

  const int n_workers = std::clamp<int>(workers, 1, static_cast<int>(cfg.variations.size()));
  if (n_workers == 1) {
    evaluate(0, cfg.variations.size());
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (cfg.variations.size() + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(cfg.variations.size(), begin + chunk);
      if (begin >= end) break;
      threads.emplace_back(evaluate, begin, end);
    }
    for (auto& t : threads) t.join();
  }

  int successes = 0;
  for (const auto& o : result.outcomes) successes += o.success ? 1 : 0;
  result.score = static_cast<double>(successes) / static_cast<double>(cfg.variations.size());
  return result;
}

}  // namespace upswing::scoring
