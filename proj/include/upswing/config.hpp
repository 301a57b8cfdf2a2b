#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "upswing/evo.hpp"
#include "upswing/rl.hpp"
#include "upswing/robustness.hpp"
#include "upswing/scoring.hpp"
#include "upswing/sim.hpp"

namespace upswing::harness {

// Everything one experiment needs: system, physics, reward, training, SNES,
// scoring constants and the robustness battery. Parsed from a JSON file with
// unit-suffixed keys; unknown keys are rejected.
struct ExperimentConfig {
  sim::SystemId system = sim::SystemId::Cartpole;
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds{1};

  sim::EnvConfig env;          // training environment
  double eval_dt_s = 0.0;      // 0 -> same as training dt
  double eval_horizon_s = 0.0; // 0 -> same as training horizon

  rl::TrainConfig train;
  std::string checkpoint_policy = "final";  // or "best_eval": snapshot with the best greedy eval
  evo::FinetuneConfig snes;
  evo::FitnessSpec fitness;
  double snes_noise_sigma = -1.0;  // < 0 -> use the variance measured after training

  scoring::CriteriaConfig criteria;
  scoring::RobustnessConfig robustness;
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_json(const std::string& text);

// Evaluation/fine-tuning environment: eval timing, exact hanging start, no noise.
sim::EnvConfig eval_env(const ExperimentConfig& cfg);

}  // namespace upswing::harness
