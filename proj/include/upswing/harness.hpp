#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "upswing/checkpoint.hpp"
#include "upswing/config.hpp"
#include "upswing/scoring.hpp"
#include "upswing/sim.hpp"

namespace upswing::harness {

int worker_count();  // UPSWING_WORKERS env var, else hardware concurrency

// File stem for one (config, seed) lineage, e.g. "cartpole_sac_seed7".
std::string run_stem(const ExperimentConfig& cfg, std::uint64_t seed);

struct TrainOutcome {
  std::string checkpoint_path;
  std::string log_path;
  double measured_variance = 0.0;
  bool aborted = false;
};

// Phase one: RL training on the surrogate reward. Writes the checkpoint
// (phase=rl, with the measured action variance) and a JSONL training log.
TrainOutcome run_train(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& info);

struct FinetuneOutcome {
  std::string checkpoint_path;
  std::string log_path;
  double best_fitness = 0.0;
};

// Phase two: SNES fine-tuning on the true objective, starting from a checkpoint.
FinetuneOutcome run_finetune(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                             std::uint64_t seed, std::ostream& info);

struct RolloutOutcome {
  std::string csv_path;
  bool diverged = false;
  std::optional<double> swing_up_time_s;
};

// Single rollout written as CSV (t,q...,qdot...,action,reward); summary on info.
RolloutOutcome run_rollout(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                           const std::string& mode, std::uint64_t seed,
                           const std::string& csv_path, std::ostream& info);

struct SeedScore {
  std::uint64_t seed = 0;
  scoring::ScoreReport report;
};

struct ScoreOutcome {
  std::string report_path;
  std::vector<SeedScore> per_seed;
  double performance_mean = 0.0, performance_std = 0.0;
  double robustness_mean = 0.0;
  double final_mean = 0.0, final_std = 0.0;
};

// Greedy rollout -> criteria -> performance score, plus the robustness battery,
// per seed; aggregates mean +- std and writes the full JSON report.
ScoreOutcome run_score(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                       const std::vector<std::uint64_t>& seeds, const std::string& report_path,
                       std::ostream& info);

// Aligns training/fine-tuning JSONL logs into one CSV; shorter series are padded
// with empty cells. metric: "auto" picks swing-up time for training logs and
// best-so-far fitness for SNES logs; otherwise any numeric record field.
void run_export_plot(const std::vector<std::string>& log_paths, const std::string& out_csv,
                     const std::string& metric, std::ostream& info);

}  // namespace upswing::harness
