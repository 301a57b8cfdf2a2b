#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "upswing/nn.hpp"
#include "upswing/policy.hpp"
#include "upswing/scoring.hpp"
#include "upswing/sim.hpp"

namespace upswing::evo {

// Diagonal-Gaussian search distribution plus adaptation rates.
struct SnesState {
  nn::ParamVector mean;
  std::vector<double> sigma;   // per-dimension step sizes, strictly positive
  double eta_mean = 1.0;
  double eta_sigma = 0.0;      // log-step-size rate; (3 + ln d) / (5 sqrt(d))
  int lambda = 40;             // population size, even (mirrored sampling)
  int generation = 0;
  std::uint64_t rng_seed = 0;
};

double default_eta_sigma(std::size_t dim);

SnesState snes_init(const nn::ParamVector& mean, double sigma_init, int lambda,
                    std::uint64_t seed, double eta_mean = 1.0, double eta_sigma = 0.0);

void validate(const SnesState& state);

struct Candidate {
  int index = 0;
  std::vector<double> noise;   // standard-normal draw s_i
  nn::ParamVector params;      // mean + sigma . noise
  double fitness = 0.0;        // higher is better
};

// Lambda candidates with mirrored noise (odd = -even); deterministic in
// (rng_seed, generation).
std::vector<Candidate> sample_population(const SnesState& state);

// Rank-based utility weights: u_k = max(0, ln(lambda/2+1) - ln k) / sum - 1/lambda,
// k = 1 for the best candidate. Sums to zero.
std::vector<double> utilities(int lambda);

// Natural-gradient update from the evaluated population:
//   mean  += eta_mean * sigma . sum_k u_k s_k
//   sigma *= exp(eta_sigma/2 * sum_k u_k (s_k^2 - 1))
// Ranking is by descending fitness, ties and non-finite values broken/last by
// index. fitnesses[k] must belong to sample_population(state)[k]; the two-argument
// form regenerates that population (sampling is deterministic in the state).
SnesState snes_step(const SnesState& state, std::span<const double> fitnesses);
SnesState snes_step(const SnesState& state, std::span<const Candidate> population,
                    std::span<const double> fitnesses);

enum class Objective { NegSwingUpTime, PerformanceScore };

Objective objective_from_string(const std::string& name);
std::string to_string(Objective o);

enum class EvalSeedPolicy { Fixed, PerGeneration };

struct FitnessSpec {
  Objective objective = Objective::NegSwingUpTime;
  int episodes_per_eval = 1;
  EvalSeedPolicy seed_policy = EvalSeedPolicy::PerGeneration;
  scoring::CriteriaConfig criteria;  // PerformanceScore objective
};

// Sentinel fitness for diverged rollouts; keeps rankings well defined.
inline constexpr double kFailureFitness = -1e9;

// Trajectory-level fitness of one rollout under the configured objective.
double trajectory_fitness(const sim::Trajectory& traj, const sim::EnvConfig& env,
                          const FitnessSpec& spec);

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double best_so_far = 0.0;
  double sigma_min = 0.0, sigma_mean = 0.0, sigma_max = 0.0;
};

struct FinetuneConfig {
  double sigma_init = 0.02;
  int lambda = 40;
  int generations = 100;
  double eta_mean = 1.0;
  double eta_sigma = 0.0;  // 0 -> default rate
  int workers = 1;
};

struct FinetuneResult {
  policy::Policy policy;          // best-evaluated parameters
  double best_fitness = 0.0;
  std::vector<GenerationRecord> log;
};

using GenerationCallback = std::function<void(const GenerationRecord&)>;

// Convergence benchmark on the d-dimensional sphere f(x) = -|x|^2 starting from
// the all-ones vector. Returns the median over n_seeds runs of the best fitness
// reached within `generations`.
double sphere_benchmark_median(int dim, int lambda, double sigma0, int generations,
                               int n_seeds, std::uint64_t seed0);

// SNES fine-tuning of the policy parameters against the trajectory-level
// objective. Candidates are evaluated with noise-injected greedy actions so the
// stochasticity of the trained agent is preserved. Candidate evaluations may run
// on a worker pool; fitnesses are merged by candidate index, so results equal
// the sequential run.
FinetuneResult finetune(const policy::Policy& initial, const sim::EnvConfig& env,
                        const FitnessSpec& fitness, const policy::NoiseInjectionConfig& noise,
                        const FinetuneConfig& cfg, std::uint64_t seed,
                        const GenerationCallback& on_generation = {});

}  // namespace upswing::evo
