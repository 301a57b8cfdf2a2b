#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "upswing/errors.hpp"
#include "upswing/evo.hpp"
#include "upswing/harness.hpp"
#include "upswing/nn.hpp"

namespace {

using namespace upswing;

harness::ExperimentConfig load_config(const std::string& path) {
  return harness::load_experiment_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-phase control learning for underactuated swing-up: actor-critic "
               "training on surrogate rewards, then SNES fine-tuning on the true objective"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_path, mode = "greedy", metric = "auto";
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> log_paths;

  auto* train = app.add_subcommand("train", "Phase 1: train an agent on the surrogate reward");
  train->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  train->add_option("--seed", seed, "training seed");

  auto* finetune = app.add_subcommand("finetune", "Phase 2: SNES fine-tuning of a checkpoint");
  finetune->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  finetune->add_option("--checkpoint", checkpoint_path, "starting checkpoint")->required();
  finetune->add_option("--seed", seed, "fine-tuning seed");

  auto* rollout = app.add_subcommand("rollout", "Roll a checkpoint once; write trajectory CSV");
  rollout->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  rollout->add_option("--checkpoint", checkpoint_path, "checkpoint to roll")->required();
  rollout->add_option("-o,--out", out_path, "trajectory CSV path")->required();
  rollout->add_option("--mode", mode, "greedy|noisy");
  rollout->add_option("--seed", seed, "rollout seed");

  auto* score = app.add_subcommand("score", "Performance + robustness score of a checkpoint");
  score->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  score->add_option("--checkpoint", checkpoint_path, "checkpoint to score")->required();
  score->add_option("-o,--out", out_path, "score report JSON path")->required();
  score->add_option("--seed", seeds, "evaluation seeds (repeatable)");

  auto* export_plot = app.add_subcommand("export-plot", "Align JSONL logs into one CSV");
  export_plot->add_option("logs", log_paths, "training/fine-tuning logs")->required();
  export_plot->add_option("-o,--out", out_path, "output CSV")->required();
  export_plot->add_option("--metric", metric, "record field, or 'auto'");
  export_plot->add_option("--seed", seed, "unused; accepted for uniformity");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the MLP gradients");
  int gradcheck_cases = 100;
  gradcheck->add_option("-n,--cases", gradcheck_cases, "number of random configurations");
  gradcheck->add_option("--seed", seed, "case generator seed");

  auto* bench = app.add_subcommand("benchmark-snes", "SNES convergence on the 20-dim sphere");
  int bench_dim = 20, bench_lambda = 40, bench_generations = 300, bench_seeds = 10;
  double bench_sigma = 0.5;
  bench->add_option("--dim", bench_dim, "problem dimension");
  bench->add_option("--lambda", bench_lambda, "population size");
  bench->add_option("--sigma", bench_sigma, "initial step size");
  bench->add_option("--generations", bench_generations, "generations per run");
  bench->add_option("--runs", bench_seeds, "independent runs for the median");
  bench->add_option("--seed", seed, "base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = load_config(config_path);
      const auto out = harness::run_train(cfg, seed, std::cout);
      std::cout << "checkpoint: " << out.checkpoint_path << "\nlog: " << out.log_path << "\n";
      return out.aborted ? 2 : 0;
    }
    if (*finetune) {
      const auto cfg = load_config(config_path);
      const auto out = harness::run_finetune(cfg, checkpoint_path, seed, std::cout);
      std::cout << "checkpoint: " << out.checkpoint_path << "\nlog: " << out.log_path << "\n";
      return 0;
    }
    if (*rollout) {
      const auto cfg = load_config(config_path);
      const auto out = harness::run_rollout(cfg, checkpoint_path, mode, seed, out_path, std::cout);
      return out.diverged ? 3 : 0;
    }
    if (*score) {
      const auto cfg = load_config(config_path);
      if (seeds.empty()) seeds = cfg.seeds;
      harness::run_score(cfg, checkpoint_path, seeds, out_path, std::cout);
      return 0;
    }
    if (*export_plot) {
      harness::run_export_plot(log_paths, out_path, metric, std::cout);
      return 0;
    }
    if (*gradcheck) {
      const double worst = nn::gradient_check_suite(gradcheck_cases, seed);
      std::cout << "worst relative error over " << gradcheck_cases << " cases: " << worst << "\n";
      if (worst < 1e-4) {
        std::cout << "gradcheck PASS\n";
        return 0;
      }
      std::cout << "gradcheck FAIL (tolerance 1e-4)\n";
      return 1;
    }
    if (*bench) {
      const double median = evo::sphere_benchmark_median(bench_dim, bench_lambda, bench_sigma,
                                                         bench_generations, bench_seeds, seed);
      std::cout << "median best fitness: " << median << "\n";
      if (median > -1e-6) {
        std::cout << "benchmark-snes PASS\n";
        return 0;
      }
      std::cout << "benchmark-snes FAIL (threshold -1e-6)\n";
      return 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 64;  // usage
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
