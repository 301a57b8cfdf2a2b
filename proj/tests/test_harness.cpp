#include "upswing/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "upswing/errors.hpp"

using namespace upswing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("upswing_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const char* kTinyCartpoleConfig = R"({
  "system": "cartpole",
  "output_dir": "OUTDIR",
  "seeds": [1],
  "env": {"dt_s": 0.05, "horizon_s": 0.5, "substeps": 5},
  "rl": {"algorithm": "sac", "episodes": 2, "policy_hidden": [8], "critic_hidden": [8],
         "batch_size": 8, "warmup_steps": 4},
  "snes": {"lambda": 4, "generations": 2}
})";

harness::ExperimentConfig tiny_config(const std::string& outdir) {
  std::string text = kTinyCartpoleConfig;
  text.replace(text.find("OUTDIR"), 6, outdir);
  return harness::experiment_config_from_json(text);
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("checkpoint round-trip is bit-exact") {
  TempDir tmp;
  const auto p = policy::make_gaussian_policy(5, {16, 16}, 1, 2.5, 11);
  auto cp = harness::checkpoint_from_policy(p, "cartpole", "rl", 11, 0.12345);
  const std::string path = tmp / "a.ckpt";
  harness::save_checkpoint(path, cp);
  const auto back = harness::load_checkpoint(path);
  CHECK(back.params == cp.params);
  CHECK(back.system == "cartpole");
  CHECK(back.phase == "rl");
  CHECK(back.kind == policy::PolicyKind::Gaussian);
  CHECK(back.action_scale == 2.5);
  CHECK(back.seed == 11);
  CHECK(back.noise_variance == 0.12345);
  CHECK(back.arch == p.arch);

  SUBCASE("identical saves are byte-identical") {
    const std::string path2 = tmp / "b.ckpt";
    harness::save_checkpoint(path2, cp);
    CHECK(slurp(path) == slurp(path2));
  }
  SUBCASE("corrupting any parameter byte is detected") {
    std::string bytes = slurp(path);
    bytes[bytes.size() - 16] ^= 0x01;  // inside the parameter block
    std::ofstream os(tmp / "c.ckpt", std::ios::binary);
    os << bytes;
    os.close();
    CHECK_THROWS_AS(harness::load_checkpoint(tmp / "c.ckpt"), DomainError);
  }
  SUBCASE("bad magic is rejected") {
    std::string bytes = slurp(path);
    bytes[0] = 'X';
    std::ofstream os(tmp / "d.ckpt", std::ios::binary);
    os << bytes;
    os.close();
    CHECK_THROWS_AS(harness::load_checkpoint(tmp / "d.ckpt"), DomainError);
  }
}

TEST_CASE("config parsing") {
  SUBCASE("unknown keys are rejected at every level") {
    CHECK_THROWS_AS(harness::experiment_config_from_json(R"({"system": "cartpole", "oops": 1})"),
                    ConfigError);
    CHECK_THROWS_AS(harness::experiment_config_from_json(
                        R"({"system": "cartpole", "env": {"dt_sec": 0.01}})"),
                    ConfigError);
    CHECK_THROWS_AS(harness::experiment_config_from_json(
                        R"({"system": "pendubot", "physics": {"cart_mass_kg": 1.0}})"),
                    ConfigError);
  }
  SUBCASE("system is required") {
    CHECK_THROWS_AS(harness::experiment_config_from_json(R"({"output_dir": "x"})"), ConfigError);
  }
  SUBCASE("system-dependent defaults") {
    const auto acro = harness::experiment_config_from_json(R"({"system": "acrobot"})");
    CHECK(acro.env.reward_weights.y_th_m == 0.375);
    CHECK(acro.snes.sigma_init == 0.01);
    CHECK(acro.fitness.objective == evo::Objective::PerformanceScore);
    CHECK(acro.criteria.k[2] == 3.0);  // follows tau_max

    const auto pend = harness::experiment_config_from_json(
        R"({"system": "pendubot", "physics": {"tau_max_Nm": 2.0}})");
    CHECK(pend.env.reward_weights.y_th_m == 0.35);
    CHECK(pend.criteria.k[2] == 2.0);

    const auto cart = harness::experiment_config_from_json(R"({"system": "cartpole"})");
    CHECK(cart.snes.sigma_init == 0.02);
    CHECK(cart.fitness.objective == evo::Objective::NegSwingUpTime);
    CHECK(cart.env.horizon_s == 3.0);
  }
  SUBCASE("eval env overrides timing and strips noise") {
    const auto cfg = harness::experiment_config_from_json(
        R"({"system": "cartpole",
            "env": {"dt_s": 0.01, "horizon_s": 3.0, "eval_dt_s": 0.05, "eval_horizon_s": 2.0,
                    "reset_noise": 0.05}})");
    CHECK(cfg.env.reset_noise == 0.05);
    const auto ev = harness::eval_env(cfg);
    CHECK(ev.integrator.dt_s == 0.05);
    CHECK(ev.horizon_s == 2.0);
    CHECK(ev.reset_noise == 0.0);
    CHECK(ev.integrator.substeps == 25);
  }
  SUBCASE("bad values are rejected") {
    CHECK_THROWS_AS(harness::experiment_config_from_json(R"({"system": "spinny"})"), ConfigError);
    CHECK_THROWS_AS(harness::experiment_config_from_json(
                        R"({"system": "cartpole", "seeds": []})"),
                    ConfigError);
    CHECK_THROWS_AS(harness::experiment_config_from_json("not json"), ConfigError);
  }
}

TEST_CASE("train and rollout commands") {
  TempDir tmp;
  const auto cfg = tiny_config(tmp / "runs");
  std::ostringstream info;

  const auto trained = harness::run_train(cfg, 1, info);
  CHECK(fs::exists(trained.checkpoint_path));
  CHECK(fs::exists(trained.log_path));
  const auto cp = harness::load_checkpoint(trained.checkpoint_path);
  CHECK(cp.phase == "rl");
  CHECK(cp.system == "cartpole");
  CHECK(cp.noise_variance == trained.measured_variance);

  SUBCASE("training is reproducible byte-for-byte") {
    auto cfg2 = tiny_config(tmp / "runs2");
    const auto again = harness::run_train(cfg2, 1, info);
    CHECK(slurp(again.checkpoint_path) == slurp(trained.checkpoint_path));
    CHECK(slurp(again.log_path) == slurp(trained.log_path));
  }
  SUBCASE("rollout writes a deterministic CSV with the declared header") {
    const auto a = harness::run_rollout(cfg, trained.checkpoint_path, "greedy", 5,
                                        tmp / "a.csv", info);
    const auto b = harness::run_rollout(cfg, trained.checkpoint_path, "greedy", 5,
                                        tmp / "b.csv", info);
    const std::string csv = slurp(a.csv_path);
    CHECK(csv == slurp(b.csv_path));
    CHECK(csv.rfind("t,q1,q2,qdot1,qdot2,action,reward\n", 0) == 0);
    CHECK(!a.diverged);
    // 0.5 s at dt 0.05: header + 10 rows
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 11);
  }
  SUBCASE("noisy rollouts differ from greedy but respect bounds") {
    auto noisy_cfg = cfg;
    noisy_cfg.snes_noise_sigma = 0.4;
    const auto g = harness::run_rollout(noisy_cfg, trained.checkpoint_path, "greedy", 5,
                                        tmp / "g.csv", info);
    const auto n = harness::run_rollout(noisy_cfg, trained.checkpoint_path, "noisy", 5,
                                        tmp / "n.csv", info);
    CHECK(slurp(g.csv_path) != slurp(n.csv_path));
  }
  SUBCASE("finetune with zero generations preserves the parameters") {
    auto zero = cfg;
    zero.snes.generations = 0;
    const auto ft = harness::run_finetune(zero, trained.checkpoint_path, 1, info);
    const auto evolved = harness::load_checkpoint(ft.checkpoint_path);
    CHECK(evolved.phase == "evolved");
    CHECK(evolved.params == cp.params);
  }
  SUBCASE("architecture mismatch is refused") {
    auto other = cfg;
    other.system = sim::SystemId::Acrobot;
    other.env.system = sim::SystemId::Acrobot;
    CHECK_THROWS_AS(harness::run_finetune(other, trained.checkpoint_path, 1, info), ConfigError);
  }
}

TEST_CASE("score command on a tiny pendubot setup") {
  TempDir tmp;
  auto cfg = harness::experiment_config_from_json(R"({
    "system": "pendubot",
    "env": {"dt_s": 0.02, "horizon_s": 1.5, "substeps": 5},
    "rl": {"episodes": 1, "policy_hidden": [8], "critic_hidden": [8],
           "batch_size": 8, "warmup_steps": 4},
    "robustness": {"param_deltas": [-0.1, 0.1], "params": ["m1"],
                   "action_noise_levels": [0.05], "measurement_noise_levels_rad": []}
  })");
  cfg.output_dir = tmp / "runs";
  std::ostringstream info;
  const auto trained = harness::run_train(cfg, 2, info);

  const auto out = harness::run_score(cfg, trained.checkpoint_path, {1, 2, 3},
                                      tmp / "score.json", info);
  CHECK(out.per_seed.size() == 3);
  CHECK(fs::exists(out.report_path));
  for (const auto& s : out.per_seed) {
    CHECK(s.report.performance == 0.0);  // an untrained policy cannot succeed
    CHECK(s.report.robustness >= 0.0);
    CHECK(s.report.final == scoring::final_score(s.report.performance, s.report.robustness));
  }
  const std::string doc = slurp(out.report_path);
  CHECK(doc.find("\"aggregate\"") != std::string::npos);
  CHECK(doc.find("\"per_seed\"") != std::string::npos);

  SUBCASE("cartpole scoring is refused") {
    const auto cart = tiny_config(tmp / "c");
    CHECK_THROWS_AS(harness::run_score(cart, trained.checkpoint_path, {1}, tmp / "s.json", info),
                    ConfigError);
  }
}

TEST_CASE("export-plot aligns logs with explicit padding") {
  TempDir tmp;
  const std::string train_log = tmp / "sac.train.jsonl";
  {
    std::ofstream os(train_log);
    os << R"({"episode":0,"eval_swing_up_time_s":null,"train_return":-5.0})" << "\n";
    os << R"({"episode":1,"eval_swing_up_time_s":2.5,"train_return":-4.0})" << "\n";
    os << R"({"episode":2,"eval_swing_up_time_s":2.0,"train_return":-3.0})" << "\n";
  }
  const std::string snes_log = tmp / "sac.snes.jsonl";
  {
    std::ofstream os(snes_log);
    os << R"({"generation":0,"best_fitness":-2.5,"best_so_far":-2.5,"mean_fitness":-3.0})" << "\n";
    os << R"({"generation":1,"best_fitness":-2.0,"best_so_far":-2.0,"mean_fitness":-2.8})" << "\n";
  }
  std::ostringstream info;

  SUBCASE("single series has one row per record") {
    harness::run_export_plot({train_log}, tmp / "one.csv", "auto", info);
    const std::string csv = slurp(tmp / "one.csv");
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 4);
    CHECK(csv.find("sac.train_index,sac.train_value") != std::string::npos);
  }
  SUBCASE("mixed lengths pad with empty cells") {
    harness::run_export_plot({train_log, snes_log}, tmp / "two.csv", "auto", info);
    std::ifstream is(tmp / "two.csv");
    std::string header, r0, r1, r2;
    std::getline(is, header);
    std::getline(is, r0);
    std::getline(is, r1);
    std::getline(is, r2);
    CHECK(r0 == "0,0,,0,-2.5");  // null swing-up time -> empty cell
    CHECK(r1 == "1,1,2.5,1,-2");
    CHECK(r2 == "2,2,2,,");      // snes series exhausted -> empty cells
  }
  SUBCASE("explicit metric selection") {
    harness::run_export_plot({train_log}, tmp / "m.csv", "train_return", info);
    CHECK(slurp(tmp / "m.csv").find("-5") != std::string::npos);
  }
  SUBCASE("unknown metric is refused") {
    CHECK_THROWS_AS(harness::run_export_plot({train_log}, tmp / "x.csv", "nope", info),
                    ConfigError);
  }
  SUBCASE("unrecognized schema is refused") {
    const std::string bad = tmp / "bad.jsonl";
    std::ofstream os(bad);
    os << R"({"step":0})" << "\n";
    os.close();
    CHECK_THROWS_AS(harness::run_export_plot({bad}, tmp / "y.csv", "auto", info), ConfigError);
  }
}

}  // TEST_SUITE
