#include "upswing/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "upswing/errors.hpp"
#include "upswing/evo.hpp"
#include "upswing/rl.hpp"
#include "upswing/robustness.hpp"

namespace upswing::harness {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot open '" + path + "' for writing");
  return os;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

json episode_to_json(const rl::EpisodeRecord& r) {
  json j;
  j["episode"] = r.episode;
  j["train_return"] = r.train_return;
  j["eval_return"] = r.eval_return;
  if (r.eval_swing_up_time_s) j["eval_swing_up_time_s"] = *r.eval_swing_up_time_s;
  else j["eval_swing_up_time_s"] = nullptr;
  j["critic_loss"] = r.critic_loss;
  j["actor_loss"] = r.actor_loss;
  j["entropy"] = r.entropy;
  j["alpha"] = r.alpha;
  j["diverged"] = r.diverged;
  return j;
}

json generation_to_json(const evo::GenerationRecord& r) {
  json j;
  j["generation"] = r.generation;
  j["best_fitness"] = r.best_fitness;
  j["mean_fitness"] = r.mean_fitness;
  j["best_so_far"] = r.best_so_far;
  j["sigma_min"] = r.sigma_min;
  j["sigma_mean"] = r.sigma_mean;
  j["sigma_max"] = r.sigma_max;
  return j;
}

sim::EnvConfig finetune_env(const ExperimentConfig& cfg) { return eval_env(cfg); }

}  // namespace

int worker_count() {
  if (const char* env = std::getenv("UPSWING_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string run_stem(const ExperimentConfig& cfg, std::uint64_t seed) {
  return sim::to_string(cfg.system) + "_" + rl::to_string(cfg.train.algorithm) + "_seed" +
         std::to_string(seed);
}

TrainOutcome run_train(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& info) {
  const std::string stem = cfg.output_dir + "/" + run_stem(cfg, seed);
  TrainOutcome out;
  out.checkpoint_path = stem + ".rl.ckpt";
  out.log_path = stem + ".train.jsonl";

  rl::TrainConfig train_cfg = cfg.train;
  train_cfg.eval_env = eval_env(cfg);

  std::ofstream log = open_out(out.log_path);
  const rl::TrainResult result =
      rl::train(cfg.env, train_cfg, seed, [&](const rl::EpisodeRecord& r) {
        log << episode_to_json(r).dump() << "\n";
      });
  log.flush();

  if (result.aborted) {
    info << "training aborted: " << result.abort_reason << "\n";
    out.aborted = true;
  }

  const bool keep_best = cfg.checkpoint_policy == "best_eval";
  const policy::Policy& saved = keep_best ? result.best_policy : result.policy;
  if (keep_best) info << "checkpointing best evaluation (episode " << result.best_episode << ")\n";

  double variance = 0.0;
  if (saved.kind == policy::PolicyKind::Gaussian) {
    variance = sim::measure_action_variance(saved, eval_env(cfg), mix_seed(seed, 0x7A));
  } else {
    // Deterministic actors carry no variance head; fall back to the exploration noise.
    variance = cfg.train.td3.exploration_noise_std * cfg.train.td3.exploration_noise_std;
  }
  out.measured_variance = variance;

  Checkpoint cp = checkpoint_from_policy(saved, sim::to_string(cfg.system), "rl", seed, variance);
  save_checkpoint(out.checkpoint_path, cp);

  info << "trained " << run_stem(cfg, seed) << ": episodes=" << result.log.size()
       << " measured_variance=" << fmt(variance) << "\n";
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    info << "final eval return " << fmt(last.eval_return) << ", swing-up time "
         << (last.eval_swing_up_time_s ? fmt(*last.eval_swing_up_time_s) + " s" : "none") << "\n";
  }
  return out;
}

FinetuneOutcome run_finetune(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                             std::uint64_t seed, std::ostream& info) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  if (cp.system != sim::to_string(cfg.system))
    throw ConfigError("finetune: checkpoint is for '" + cp.system + "', config wants '" +
                      sim::to_string(cfg.system) + "'");
  if (cp.phase != "rl" && cp.phase != "evolved")
    throw ConfigError("finetune: unexpected checkpoint phase '" + cp.phase + "'");
  const policy::Policy initial = policy_from_checkpoint(cp);

  policy::NoiseInjectionConfig noise;
  if (cfg.snes_noise_sigma >= 0.0) {
    noise.sigma = cfg.snes_noise_sigma;
  } else if (cp.noise_variance > 0.0) {
    noise.sigma = std::sqrt(cp.noise_variance);
  }

  const std::string stem = cfg.output_dir + "/" + run_stem(cfg, seed);
  FinetuneOutcome out;
  out.checkpoint_path = stem + ".evolved.ckpt";
  out.log_path = stem + ".snes.jsonl";

  evo::FinetuneConfig snes = cfg.snes;
  if (snes.workers <= 1) snes.workers = worker_count();

  std::ofstream log = open_out(out.log_path);
  const evo::FinetuneResult result =
      evo::finetune(initial, finetune_env(cfg), cfg.fitness, noise, snes, seed,
                    [&](const evo::GenerationRecord& r) {
                      log << generation_to_json(r).dump() << "\n";
                    });
  log.flush();
  out.best_fitness = result.best_fitness;

  Checkpoint evolved = checkpoint_from_policy(result.policy, cp.system, "evolved", seed,
                                              cp.noise_variance);
  save_checkpoint(out.checkpoint_path, evolved);

  info << "fine-tuned " << run_stem(cfg, seed) << ": generations=" << result.log.size()
       << " noise_sigma=" << fmt(noise.sigma) << " best_fitness=" << fmt(result.best_fitness)
       << "\n";
  return out;
}

RolloutOutcome run_rollout(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                           const std::string& mode, std::uint64_t seed,
                           const std::string& csv_path, std::ostream& info) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  if (cp.system != sim::to_string(cfg.system))
    throw ConfigError("rollout: checkpoint is for '" + cp.system + "', config wants '" +
                      sim::to_string(cfg.system) + "'");
  const policy::Policy p = policy_from_checkpoint(cp);

  sim::RolloutOptions opt;
  opt.seed = seed;
  if (mode == "greedy") {
    opt.mode = sim::ControlMode::Greedy;
  } else if (mode == "noisy") {
    opt.mode = sim::ControlMode::Noisy;
    opt.noise.sigma = cfg.snes_noise_sigma >= 0.0 ? cfg.snes_noise_sigma
                      : (cp.noise_variance > 0.0 ? std::sqrt(cp.noise_variance) : 0.0);
  } else {
    throw ConfigError("rollout: mode must be 'greedy' or 'noisy'");
  }

  const sim::EnvConfig env = eval_env(cfg);
  const sim::Trajectory traj = sim::rollout(p, env, opt);

  std::ofstream os = open_out(csv_path);
  os << "t,q1,q2,qdot1,qdot2,action,reward\n";
  for (int k = 0; k < traj.steps(); ++k) {
    const auto& s = traj.states[k];
    os << fmt(k * traj.dt_s) << "," << fmt(s.q[0]) << "," << fmt(s.q[1]) << ","
       << fmt(s.qdot[0]) << "," << fmt(s.qdot[1]) << "," << fmt(traj.controls[k]) << ","
       << fmt(traj.rewards[k]) << "\n";
  }
  if (traj.diverged) os << "# diverged at t=" << fmt(traj.steps() * traj.dt_s) << "\n";

  RolloutOutcome out;
  out.csv_path = csv_path;
  out.diverged = traj.diverged;

  if (cfg.system == sim::SystemId::Cartpole) {
    out.swing_up_time_s = scoring::swing_up_time(traj, env.cartpole);
    info << "rollout: steps=" << traj.steps() << " swing_up_time="
         << (out.swing_up_time_s ? fmt(*out.swing_up_time_s) + " s" : "none") << "\n";
  } else if (!traj.diverged) {
    const auto cr = scoring::extract_criteria(traj, env.pendulum_params(), cfg.criteria);
    if (cr.c_succ == 1) out.swing_up_time_s = cr.criteria.x[0];
    info << "rollout: steps=" << traj.steps() << " c_succ=" << cr.c_succ
         << " swing_up_time=" << fmt(cr.criteria.x[0]) << " s"
         << " max_torque=" << fmt(cr.criteria.x[2]) << " Nm"
         << " performance=" << fmt(scoring::performance_score(cr.criteria, cr.c_succ)) << "\n";
  } else {
    info << "rollout diverged after " << traj.steps() << " steps\n";
  }
  return out;
}

ScoreOutcome run_score(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                       const std::vector<std::uint64_t>& seeds, const std::string& report_path,
                       std::ostream& info) {
  if (cfg.system == sim::SystemId::Cartpole)
    throw ConfigError("score: defined for the double pendulum systems (cartpole reports "
                      "swing-up time via 'rollout')");
  if (seeds.empty()) throw ConfigError("score: at least one seed required");

  const Checkpoint cp = load_checkpoint(checkpoint_path);
  if (cp.system != sim::to_string(cfg.system))
    throw ConfigError("score: checkpoint is for '" + cp.system + "', config wants '" +
                      sim::to_string(cfg.system) + "'");
  const policy::Policy p = policy_from_checkpoint(cp);
  const sim::EnvConfig env = eval_env(cfg);
  const int workers = worker_count();

  ScoreOutcome out;
  out.report_path = report_path;
  for (const std::uint64_t seed : seeds) {
    sim::RolloutOptions opt;
    opt.mode = sim::ControlMode::Greedy;
    opt.seed = mix_seed(seed, 0x5C0);
    const sim::Trajectory traj = sim::rollout(p, env, opt);

    scoring::ScoreReport report;
    if (!traj.diverged) {
      const auto cr = scoring::extract_criteria(traj, env.pendulum_params(), cfg.criteria);
      report.c_succ = cr.c_succ;
      report.criteria = cr.criteria;
      report.performance = scoring::performance_score(cr.criteria, cr.c_succ);
    } else {
      report.criteria.k = cfg.criteria.k;
    }
    const auto rob = scoring::robustness_score(p, env, cfg.robustness, cfg.criteria,
                                               mix_seed(seed, 0xB0B), workers);
    report.robustness = rob.score;
    report.final = scoring::final_score(report.performance, report.robustness);
    out.per_seed.push_back({seed, report});
  }

  const auto mean_of = [&](auto getter) {
    double acc = 0.0;
    for (const auto& s : out.per_seed) acc += getter(s.report);
    return acc / out.per_seed.size();
  };
  const auto std_of = [&](auto getter, double mean) {
    if (out.per_seed.size() < 2) return 0.0;
    double acc = 0.0;
    for (const auto& s : out.per_seed) {
      const double d = getter(s.report) - mean;
      acc += d * d;
    }
    return std::sqrt(acc / (out.per_seed.size() - 1));
  };
  out.performance_mean = mean_of([](const auto& r) { return r.performance; });
  out.performance_std = std_of([](const auto& r) { return r.performance; }, out.performance_mean);
  out.robustness_mean = mean_of([](const auto& r) { return r.robustness; });
  out.final_mean = mean_of([](const auto& r) { return r.final; });
  out.final_std = std_of([](const auto& r) { return r.final; }, out.final_mean);

  json doc;
  doc["checkpoint"] = std::filesystem::path(checkpoint_path).filename().string();
  doc["system"] = cp.system;
  doc["phase"] = cp.phase;
  doc["per_seed"] = json::array();
  for (const auto& s : out.per_seed) {
    json entry = json::parse(scoring::to_json(s.report));
    entry["seed"] = s.seed;
    doc["per_seed"].push_back(entry);
  }
  doc["aggregate"] = {{"performance_mean", out.performance_mean},
                      {"performance_std", out.performance_std},
                      {"robustness_mean", out.robustness_mean},
                      {"final_mean", out.final_mean},
                      {"final_std", out.final_std}};
  std::ofstream os = open_out(report_path);
  os << doc.dump(2) << "\n";

  info << "score (" << cp.phase << " checkpoint, " << out.per_seed.size() << " seeds):\n";
  info << "  performance " << fmt(out.performance_mean) << " +- " << fmt(out.performance_std)
       << "\n  robustness  " << fmt(out.robustness_mean) << "\n  final       "
       << fmt(out.final_mean) << " +- " << fmt(out.final_std) << "\n";
  return out;
}

void run_export_plot(const std::vector<std::string>& log_paths, const std::string& out_csv,
                     const std::string& metric, std::ostream& info) {
  if (log_paths.empty()) throw ConfigError("export-plot: at least one log required");

  struct Series {
    std::string label;
    std::vector<std::string> index, value;
  };
  std::vector<Series> series;

  for (const auto& path : log_paths) {
    std::ifstream is(path);
    if (!is) throw DomainError("export-plot: cannot open '" + path + "'");
    Series s;
    s.label = std::filesystem::path(path).stem().string();
    std::string line;
    std::string kind;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const bool is_training = j.contains("episode");
      const bool is_snes = j.contains("generation");
      if (!is_training && !is_snes)
        throw ConfigError("export-plot: unrecognized log schema in '" + path + "'");
      const std::string this_kind = is_training ? "episode" : "generation";
      if (kind.empty()) kind = this_kind;
      else if (kind != this_kind)
        throw ConfigError("export-plot: mixed log schemas in '" + path + "'");

      s.index.push_back(std::to_string(j.at(this_kind).get<long>()));
      std::string field = metric;
      if (field == "auto") field = is_training ? "eval_swing_up_time_s" : "best_so_far";
      if (!j.contains(field))
        throw ConfigError("export-plot: log '" + path + "' has no field '" + field + "'");
      const auto& v = j.at(field);
      s.value.push_back(v.is_null() ? "" : fmt(v.get<double>()));
    }
    series.push_back(std::move(s));
  }

  std::size_t rows = 0;
  for (const auto& s : series) rows = std::max(rows, s.index.size());

  std::ofstream os = open_out(out_csv);
  os << "row";
  for (const auto& s : series) os << "," << s.label << "_index," << s.label << "_value";
  os << "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    os << r;
    for (const auto& s : series) {
      // Shorter series get explicit empty cells, never fabricated values.
      if (r < s.index.size()) os << "," << s.index[r] << "," << s.value[r];
      else os << ",,";
    }
    os << "\n";
  }
  info << "wrote " << out_csv << " (" << rows << " rows, " << series.size() << " series)\n";
}

}  // namespace upswing::harness
