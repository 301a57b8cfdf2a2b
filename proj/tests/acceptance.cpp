// Acceptance suite: one checkable criterion per number, each printing a
// [PASS]/[FAIL] line. Run all or a subset:
//   acceptance --criterion 1 2 3
//   acceptance --cli path/to/upswing --workdir /tmp/acc --criterion 8
// The pipeline criteria (5, 6, 7) train at desk scale and take minutes to
// hours; everything else runs in seconds.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "upswing/errors.hpp"
#include "upswing/evo.hpp"
#include "upswing/harness.hpp"
#include "upswing/nn.hpp"
#include "upswing/physics.hpp"
#include "upswing/policy.hpp"
#include "upswing/rl.hpp"
#include "upswing/robustness.hpp"
#include "upswing/scoring.hpp"
#include "upswing/sim.hpp"

namespace fs = std::filesystem;
using namespace upswing;

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

struct Options {
  std::vector<int> criteria;
  std::string cli_path;
  std::string config_dir = "configs";
  std::string workdir;
};

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---- criterion 1: gradient correctness ------------------------------------
void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double worst = nn::gradient_check_suite(100, 20240807);
  const double dt = seconds_since(t0);
  report(1, worst < 1e-4 && dt < 60.0, "reverse-mode gradients vs central finite differences",
         "worst rel err " + fmt(worst) + " over 100 configs, " + fmt(dt) + " s");
}

// ---- criterion 2: physics validity -----------------------------------------
void criterion_2() {
  bool pass = true;
  std::string detail;

  physics::DoublePendulumParams dp;
  dp.b1_Nms = 0.0;
  dp.b2_Nms = 0.0;
  physics::IntegratorConfig integ;
  integ.dt_s = 1e-3;
  integ.substeps = 1;
  physics::SystemState s{{kPi / 2.0, 0.0}, {0.0, 0.0}};
  const double e0 = physics::mechanical_energy(s, dp).total();
  double drift = 0.0;
  for (int k = 0; k < 10'000; ++k) {
    s = physics::step(s, 0.0, dp, integ);
    drift = std::max(drift, std::abs(physics::mechanical_energy(s, dp).total() - e0));
  }
  const double rel_drift = drift / e0;
  pass = pass && rel_drift < 1e-3;
  detail += "energy drift " + fmt(rel_drift);

  physics::CartpoleParams cp;
  for (double theta : {0.0, kPi}) {
    const auto d = physics::cartpole_derivative({{0.0, theta}, {0.0, 0.0}}, 0.0, cp);
    pass = pass && std::abs(d.qddot[0]) < 1e-13 && std::abs(d.qddot[1]) < 1e-13;
  }
  for (auto q : {std::array<double, 2>{0, 0}, std::array<double, 2>{kPi, 0}}) {
    const auto d = physics::double_pendulum_derivative({q, {0.0, 0.0}}, 0.0, dp);
    pass = pass && std::abs(d.qddot[0]) < 1e-13 && std::abs(d.qddot[1]) < 1e-13;
  }
  detail += ", equilibrium derivatives exact";
  report(2, pass, "energy conservation and equilibria", detail);
}

// ---- criterion 3: SNES on the sphere ---------------------------------------
void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  const double median = evo::sphere_benchmark_median(20, 40, 0.5, 300, 10, 424242);
  const double dt = seconds_since(t0);
  report(3, median > -1e-6 && dt < 60.0, "20-dim sphere convergence (lambda=40, sigma=0.5)",
         "median best " + fmt(median) + " over 10 seeds, " + fmt(dt) + " s");
}

// ---- criterion 4: score formula --------------------------------------------
void criterion_4() {
  bool pass = true;
  scoring::ScoreCriteria c;
  c.x = {1, 2, 3, 4, 5};
  pass = pass && scoring::performance_score(c, 0) == 0.0;
  c.x = {0, 0, 0, 0, 0};
  pass = pass && std::abs(scoring::performance_score(c, 1) - 1.0) < 1e-12;
  c.x = c.k;
  const double at_k = scoring::performance_score(c, 1);
  pass = pass && std::abs(at_k - (1.0 - std::tanh(kPi))) < 1e-12;

  const double acrobot_final = scoring::final_score(0.524, 0.692);
  const double pendubot_final = scoring::final_score(0.596, 0.796);
  pass = pass && std::abs(acrobot_final - 0.608) < 1e-12;
  pass = pass && std::abs(pendubot_final - 0.696) < 1e-12;
  report(4, pass, "tabulated score identities",
         "x=k gives " + fmt(at_k) + "; finals " + fmt(acrobot_final) + ", " +
             fmt(pendubot_final));
}

// ---- criterion 5: cartpole pipeline ----------------------------------------
std::optional<double> greedy_swing_up_time(const harness::ExperimentConfig& cfg,
                                           const std::string& checkpoint_path) {
  const auto cp = harness::load_checkpoint(checkpoint_path);
  const auto p = harness::policy_from_checkpoint(cp);
  sim::RolloutOptions opt;
  opt.mode = sim::ControlMode::Greedy;
  opt.seed = 0;
  const auto traj = sim::rollout(p, harness::eval_env(cfg), opt);
  return scoring::swing_up_time(traj, cfg.env.cartpole);
}

void criterion_5(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = harness::load_experiment_config(opt.config_dir + "/cartpole.json");
  cfg.output_dir = opt.workdir + "/cartpole";

  std::ostringstream info;
  const std::uint64_t seed = cfg.seeds.front();
  const auto trained = harness::run_train(cfg, seed, info);
  const auto ts_rl = greedy_swing_up_time(cfg, trained.checkpoint_path);
  if (!ts_rl) {
    report(5, false, "cartpole SAC+SNES pipeline",
           "SAC policy has no finite swing-up time after " +
               std::to_string(cfg.train.episodes) + " episodes");
    return;
  }

  const auto tuned = harness::run_finetune(cfg, trained.checkpoint_path, seed, info);
  const auto ts_evo = greedy_swing_up_time(cfg, tuned.checkpoint_path);
  if (!ts_evo) {
    report(5, false, "cartpole SAC+SNES pipeline",
           "fine-tuned policy lost the swing-up (SAC t_s " + fmt(*ts_rl) + " s)");
    return;
  }
  const double improvement = (*ts_rl - *ts_evo) / *ts_rl;
  report(5, improvement >= 0.10, "cartpole SAC+SNES pipeline",
         "t_s " + fmt(*ts_rl) + " s -> " + fmt(*ts_evo) + " s (" + fmt(improvement * 100.0) +
             "% better), " + fmt(seconds_since(t0) / 60.0) + " min");
}

// ---- criteria 6 and 7: double pendulum pipeline -----------------------------
struct PendulumRun {
  double perf_rl = 0.0, perf_evo = 0.0;
  double rob_rl = 0.0, rob_evo = 0.0;
};

PendulumRun run_pendulum_seed(const harness::ExperimentConfig& base, std::uint64_t seed,
                              const std::string& outdir) {
  auto cfg = base;
  cfg.output_dir = outdir;
  std::ostringstream info;
  const auto trained = harness::run_train(cfg, seed, info);
  const auto tuned = harness::run_finetune(cfg, trained.checkpoint_path, seed, info);

  const std::vector<std::uint64_t> eval_seeds{1, 2};
  const auto s_rl = harness::run_score(cfg, trained.checkpoint_path, eval_seeds,
                                       outdir + "/score_rl_seed" + std::to_string(seed) + ".json",
                                       info);
  const auto s_evo = harness::run_score(cfg, tuned.checkpoint_path, eval_seeds,
                                        outdir + "/score_evolved_seed" + std::to_string(seed) +
                                            ".json",
                                        info);
  PendulumRun r;
  r.perf_rl = s_rl.performance_mean;
  r.perf_evo = s_evo.performance_mean;
  r.rob_rl = s_rl.robustness_mean;
  r.rob_evo = s_evo.robustness_mean;
  return r;
}

void criteria_6_7(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass6 = true, pass7 = true;
  std::string detail6, detail7;

  for (const std::string system : {"pendubot", "acrobot"}) {
    auto cfg = harness::load_experiment_config(opt.config_dir + "/" + system + ".json");
    const std::vector<std::uint64_t> seeds(cfg.seeds.begin(),
                                           cfg.seeds.begin() + std::min<std::size_t>(
                                                                   3, cfg.seeds.size()));
    double sum_rl = 0.0, sum_evo = 0.0;
    double worst_rob_drop = 0.0;
    for (const std::uint64_t seed : seeds) {
      const auto r = run_pendulum_seed(cfg, seed, opt.workdir + "/" + system);
      sum_rl += r.perf_rl;
      sum_evo += r.perf_evo;
      worst_rob_drop = std::max(worst_rob_drop, r.rob_rl - r.rob_evo);
      std::printf("  %s seed %llu: S %0.4f -> %0.4f, robustness %0.3f -> %0.3f\n",
                  system.c_str(), static_cast<unsigned long long>(seed), r.perf_rl, r.perf_evo,
                  r.rob_rl, r.rob_evo);
      std::fflush(stdout);
    }
    const double mean_rl = sum_rl / seeds.size();
    const double mean_evo = sum_evo / seeds.size();
    pass6 = pass6 && mean_evo >= mean_rl;
    pass7 = pass7 && worst_rob_drop <= 0.05;
    detail6 += system + " " + fmt(mean_rl) + " -> " + fmt(mean_evo) + "; ";
    detail7 += system + " worst drop " + fmt(worst_rob_drop) + "; ";
  }
  detail6 += fmt(seconds_since(t0) / 60.0) + " min";
  report(6, pass6, "evolved mean performance >= SAC parent (both systems)", detail6);
  report(7, pass7, "robustness preserved within 0.05 absolute", detail7);
}

// ---- criterion 8: CLI determinism -------------------------------------------
int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return "<missing " + path + ">";
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool same_bytes(const std::string& a, const std::string& b, std::string& why) {
  const std::string sa = slurp(a), sb = slurp(b);
  if (sa == sb) return true;
  why = fs::path(a).filename().string();
  return false;
}

void criterion_8(const Options& opt) {
  if (opt.cli_path.empty()) {
    report(8, false, "CLI determinism", "no --cli path given");
    return;
  }
  const std::string dir = opt.workdir + "/determinism";
  fs::create_directories(dir);

  // Small but complete pipeline: train, finetune, rollout, score, export-plot.
  const std::string cfg_text = R"({
    "system": "pendubot",
    "output_dir": "OUT",
    "seeds": [3],
    "env": {"dt_s": 0.02, "horizon_s": 1.0, "substeps": 5},
    "rl": {"algorithm": "sac", "episodes": 4, "policy_hidden": [16], "critic_hidden": [16],
           "batch_size": 16, "warmup_steps": 16},
    "snes": {"lambda": 4, "generations": 3},
    "robustness": {"params": ["m1"], "param_deltas": [0.1],
                   "action_noise_levels": [0.05], "measurement_noise_levels_rad": []}
  })";

  bool pass = true;
  std::string why;
  std::array<std::string, 2> roots{dir + "/a", dir + "/b"};
  for (const auto& root : roots) {
    fs::create_directories(root);
    std::string text = cfg_text;
    text.replace(text.find("OUT"), 3, root);
    std::ofstream(root + "/cfg.json") << text;
    const std::string stem = root + "/pendubot_sac_seed3";
    int rc = run_cli(opt.cli_path, "train -c " + root + "/cfg.json --seed 3");
    rc |= run_cli(opt.cli_path, "finetune -c " + root + "/cfg.json --checkpoint " + stem +
                                    ".rl.ckpt --seed 3");
    rc |= run_cli(opt.cli_path, "rollout -c " + root + "/cfg.json --checkpoint " + stem +
                                    ".evolved.ckpt --seed 3 -o " + root + "/traj.csv");
    rc |= run_cli(opt.cli_path, "score -c " + root + "/cfg.json --checkpoint " + stem +
                                    ".evolved.ckpt --seed 5 -o " + root + "/score.json");
    rc |= run_cli(opt.cli_path, "export-plot " + stem + ".train.jsonl " + stem +
                                    ".snes.jsonl -o " + root + "/plot.csv");
    if (rc != 0) {
      pass = false;
      why = "CLI command failed";
    }
  }
  for (const char* name :
       {"pendubot_sac_seed3.rl.ckpt", "pendubot_sac_seed3.evolved.ckpt",
        "pendubot_sac_seed3.train.jsonl", "pendubot_sac_seed3.snes.jsonl"}) {
    pass = pass && same_bytes(roots[0] + "/" + name, roots[1] + "/" + name, why);
  }
  for (const char* name : {"traj.csv", "score.json", "plot.csv"}) {
    pass = pass && same_bytes(roots[0] + "/" + name, roots[1] + "/" + name, why);
  }
  report(8, pass, "byte-identical CLI reruns (train/finetune/rollout/score/export-plot)",
         pass ? "all artifacts identical" : ("first mismatch: " + why));
}

// ---- criterion 9: noise injection -------------------------------------------
void criterion_9() {
  bool pass = true;
  std::string detail;

  Rng case_rng(99);
  double worst_gap = 0.0;
  for (int c = 0; c < 20; ++c) {
    auto p = policy::make_gaussian_policy(5, {16}, 1, 2.5, 1000 + c);
    std::vector<double> obs(5);
    for (auto& v : obs) v = case_rng.normal();
    const double g = policy::greedy_action(p, obs)[0];
    Rng rng(1);
    const double n = policy::noisy_greedy_action(p, obs, {0.0, 1e-6}, rng)[0];
    worst_gap = std::max(worst_gap, std::abs(n - g));
  }
  pass = pass && worst_gap <= 1e-9 * 2.5;
  detail += "sigma=0 gap " + fmt(worst_gap);

  const double sigma = 0.25;
  auto p = policy::make_gaussian_policy(5, {16}, 1, 2.5, 7);
  const std::vector<double> obs{0.2, -0.1, 0.4, 0.0, -0.3};
  const double u0 = std::atanh(policy::greedy_action(p, obs)[0] / 2.5);
  Rng rng(17);
  const int n = 100'000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = policy::noisy_greedy_action(p, obs, {sigma, 1e-6}, rng)[0];
    const double du = std::atanh(a / 2.5) - u0;
    sum += du;
    sum_sq += du * du;
  }
  const double var = (sum_sq - sum * sum / n) / (n - 1);
  const double rel = std::abs(var - sigma * sigma) / (sigma * sigma);
  pass = pass && rel < 0.02;
  detail += ", empirical variance off by " + fmt(rel * 100.0) + "%";
  report(9, pass, "noise-injection procedure", detail);
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion") {
      while (i + 1 < argc && argv[i + 1][0] != '-') opt.criteria.push_back(std::atoi(argv[++i]));
    } else if (arg == "--cli" && i + 1 < argc) {
      opt.cli_path = argv[++i];
    } else if (arg == "--config-dir" && i + 1 < argc) {
      opt.config_dir = argv[++i];
    } else if (arg == "--workdir" && i + 1 < argc) {
      opt.workdir = argv[++i];
    } else {
      std::fprintf(stderr, "unknown argument '%s'\n", arg.c_str());
      return 64;
    }
  }
  if (opt.criteria.empty()) opt.criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  if (opt.workdir.empty()) {
    opt.workdir = (fs::temp_directory_path() / "upswing_acceptance").string();
  }
  fs::create_directories(opt.workdir);

  const auto wants = [&](int c) {
    for (int x : opt.criteria)
      if (x == c) return true;
    return false;
  };

  try {
    if (wants(1)) criterion_1();
    if (wants(2)) criterion_2();
    if (wants(3)) criterion_3();
    if (wants(4)) criterion_4();
    if (wants(5)) criterion_5(opt);
    if (wants(6) || wants(7)) criteria_6_7(opt);
    if (wants(8)) criterion_8(opt);
    if (wants(9)) criterion_9();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance run aborted: %s\n", e.what());
    return 70;
  }

  if (g_failures == 0) {
    std::printf("acceptance: all requested criteria passed\n");
  } else {
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
