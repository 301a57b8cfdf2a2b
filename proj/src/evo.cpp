#include "upswing/evo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "upswing/errors.hpp"

namespace upswing::evo {

double default_eta_sigma(std::size_t dim) {
  return (3.0 + std::log(static_cast<double>(dim))) / (5.0 * std::sqrt(static_cast<double>(dim)));
}

SnesState snes_init(const nn::ParamVector& mean, double sigma_init, int lambda,
                    std::uint64_t seed, double eta_mean, double eta_sigma) {
  if (!(sigma_init > 0.0)) throw ConfigError("snes: sigma_init must be positive");
  SnesState s;
  s.mean = mean;
  s.sigma.assign(mean.size(), sigma_init);
  s.eta_mean = eta_mean;
  s.eta_sigma = eta_sigma > 0.0 ? eta_sigma : default_eta_sigma(mean.size());
  s.lambda = lambda;
  s.rng_seed = seed;
  validate(s);
  return s;
}

void validate(const SnesState& state) {
  if (state.mean.empty()) throw ConfigError("snes: empty mean");
  if (state.sigma.size() != state.mean.size()) throw ConfigError("snes: sigma length mismatch");
  for (double s : state.sigma)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("snes: sigma must be positive and finite");
  if (state.lambda < 4 || state.lambda % 2 != 0)
    throw ConfigError("snes: lambda must be even and >= 4 for mirrored sampling");
  if (!(state.eta_mean >= 0.0) || !(state.eta_sigma >= 0.0))
    throw ConfigError("snes: learning rates must be >= 0");
}

std::vector<Candidate> sample_population(const SnesState& state) {
  validate(state);
  const std::size_t d = state.mean.size();
  Rng rng(mix_seed(state.rng_seed, static_cast<std::uint64_t>(state.generation)));

  std::vector<Candidate> pop(state.lambda);
  for (int k = 0; k < state.lambda; k += 2) {
    Candidate& even = pop[k];
    Candidate& odd = pop[k + 1];
    even.index = k;
    odd.index = k + 1;
    even.noise.resize(d);
    odd.noise.resize(d);
    even.params.resize(d);
    odd.params.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double s = rng.normal();
      even.noise[i] = s;
      odd.noise[i] = -s;
      even.params[i] = state.mean[i] + state.sigma[i] * s;
      odd.params[i] = state.mean[i] - state.sigma[i] * s;
    }
  }
  return pop;
}

std::vector<double> utilities(int lambda) {
  if (lambda < 2) throw ConfigError("utilities: lambda must be >= 2");
  std::vector<double> u(lambda);
  const double base = std::log(lambda / 2.0 + 1.0);
  double total = 0.0;
  for (int k = 0; k < lambda; ++k) {
    u[k] = std::max(0.0, base - std::log(static_cast<double>(k + 1)));
    total += u[k];
  }
  for (int k = 0; k < lambda; ++k) u[k] = u[k] / total - 1.0 / lambda;
  return u;
}

SnesState snes_step(const SnesState& state, std::span<const double> fitnesses) {
  const std::vector<Candidate> pop = sample_population(state);
  return snes_step(state, pop, fitnesses);
}

SnesState snes_step(const SnesState& state, std::span<const Candidate> pop,
                    std::span<const double> fitnesses) {
  validate(state);
  if (static_cast<int>(fitnesses.size()) != state.lambda ||
      static_cast<int>(pop.size()) != state.lambda)
    throw ConfigError("snes_step: one fitness per candidate required");

  // Rank candidates: descending fitness, non-finite last, ties by index.
  std::vector<int> order(state.lambda);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool fa = std::isfinite(fitnesses[a]), fb = std::isfinite(fitnesses[b]);
    if (fa != fb) return fa;
    if (!fa) return false;
    return fitnesses[a] > fitnesses[b];
  });

  // Candidates with equal fitness share the mean utility of their rank span, so
  // the update does not depend on how ties are ordered; with all fitnesses tied
  // the mirrored noise cancels and the mean shift is exactly zero.
  const std::vector<double> u = utilities(state.lambda);
  std::vector<double> w(state.lambda, 0.0);
  const auto tied = [&](int a, int b) {
    const bool fa = std::isfinite(fitnesses[a]), fb = std::isfinite(fitnesses[b]);
    if (fa != fb) return false;
    return !fa || fitnesses[a] == fitnesses[b];
  };
  for (int rank = 0; rank < state.lambda;) {
    int end = rank + 1;
    while (end < state.lambda && tied(order[rank], order[end])) ++end;
    double group = 0.0;
    for (int k = rank; k < end; ++k) group += u[k];
    const double shared = group / (end - rank);
    for (int k = rank; k < end; ++k) w[order[k]] = shared;
    rank = end;
  }

  const std::size_t d = state.mean.size();
  std::vector<double> grad_mean(d, 0.0), grad_sigma(d, 0.0);
  for (int k = 0; k < state.lambda; ++k) {
    const Candidate& c = pop[k];
    const double wk = w[k];
    for (std::size_t i = 0; i < d; ++i) {
      const double s = c.noise[i];
      grad_mean[i] += wk * s;
      grad_sigma[i] += wk * (s * s - 1.0);
    }
  }

  SnesState next = state;
  for (std::size_t i = 0; i < d; ++i) {
    next.mean[i] += next.eta_mean * next.sigma[i] * grad_mean[i];
    next.sigma[i] *= std::exp(0.5 * next.eta_sigma * grad_sigma[i]);
  }
  ++next.generation;
  return next;
}

Objective objective_from_string(const std::string& name) {
  if (name == "neg_swing_up_time") return Objective::NegSwingUpTime;
  if (name == "performance_score") return Objective::PerformanceScore;
  throw ConfigError("unknown objective '" + name + "'");
}

std::string to_string(Objective o) {
  return o == Objective::NegSwingUpTime ? "neg_swing_up_time" : "performance_score";
}

double trajectory_fitness(const sim::Trajectory& traj, const sim::EnvConfig& env,
                          const FitnessSpec& spec) {
  if (traj.diverged) return kFailureFitness;
  if (spec.objective == Objective::NegSwingUpTime) {
    if (env.system != sim::SystemId::Cartpole)
      throw ConfigError("neg_swing_up_time objective requires the cartpole");
    const auto ts = scoring::swing_up_time(traj, env.cartpole);
    if (ts) return -*ts;
    // Never settled: worse than any achieved time, ordered by closeness at the end.
    const auto tip = physics::pole_tip(traj.states.back(), env.cartpole);
    const double dx = tip[0];
    const double dy = tip[1] - env.cartpole.pole_length_m;
    return -(traj.duration_s() + std::sqrt(dx * dx + dy * dy));
  }
  const auto r = scoring::extract_criteria(traj, env.pendulum_params(), spec.criteria);
  return scoring::performance_score(r.criteria, r.c_succ);
}

double sphere_benchmark_median(int dim, int lambda, double sigma0, int generations,
                               int n_seeds, std::uint64_t seed0) {
  std::vector<double> bests;
  for (int s = 0; s < n_seeds; ++s) {
    SnesState state = snes_init(nn::ParamVector(dim, 1.0), sigma0, lambda, mix_seed(seed0, s));
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> fitnesses(lambda);
    for (int gen = 0; gen < generations; ++gen) {
      const auto pop = sample_population(state);
      for (int k = 0; k < lambda; ++k) {
        double sq = 0.0;
        for (double v : pop[k].params) sq += v * v;
        fitnesses[k] = -sq;
        best = std::max(best, fitnesses[k]);
      }
      state = snes_step(state, pop, fitnesses);
    }
    bests.push_back(best);
  }
  std::sort(bests.begin(), bests.end());
  const std::size_t n = bests.size();
  return n % 2 == 1 ? bests[n / 2] : 0.5 * (bests[n / 2 - 1] + bests[n / 2]);
}

namespace {

double evaluate_candidate(const policy::Policy& proto, const nn::ParamVector& params,
                          const sim::EnvConfig& env, const FitnessSpec& spec,
                          const policy::NoiseInjectionConfig& noise,
                          std::uint64_t episode_seed_base) {
  policy::Policy p = proto;
  p.params = params;
  double acc = 0.0;
  for (int e = 0; e < spec.episodes_per_eval; ++e) {
    sim::RolloutOptions opt;
    opt.mode = noise.sigma > 0.0 ? sim::ControlMode::Noisy : sim::ControlMode::Greedy;
    opt.noise = noise;
    opt.seed = mix_seed(episode_seed_base, static_cast<std::uint64_t>(e));
    const sim::Trajectory traj = sim::rollout(p, env, opt);
    acc += trajectory_fitness(traj, env, spec);
  }
  return acc / spec.episodes_per_eval;
}

}  // namespace

FinetuneResult finetune(const policy::Policy& initial, const sim::EnvConfig& env,
                        const FitnessSpec& fitness, const policy::NoiseInjectionConfig& noise,
                        const FinetuneConfig& cfg, std::uint64_t seed,
                        const GenerationCallback& on_generation) {
  policy::validate(initial);
  sim::validate(env);
  if (fitness.episodes_per_eval < 1)
    throw ConfigError("finetune: episodes_per_eval must be >= 1");
  if (cfg.generations < 0) throw ConfigError("finetune: generations must be >= 0");

  FinetuneResult result;
  result.policy = initial;
  result.best_fitness = -std::numeric_limits<double>::infinity();
  if (cfg.generations == 0) return result;

  SnesState state = snes_init(initial.params, cfg.sigma_init, cfg.lambda, mix_seed(seed, 0xE5),
                              cfg.eta_mean, cfg.eta_sigma);

  const int workers = std::max(1, cfg.workers);
  for (int gen = 0; gen < cfg.generations; ++gen) {
    const std::vector<Candidate> pop = sample_population(state);

    // Common random numbers across the population: all candidates of a
    // generation see the same episode seeds.
    const std::uint64_t gen_stream =
        fitness.seed_policy == EvalSeedPolicy::PerGeneration ? static_cast<std::uint64_t>(gen) : 0;
    const std::uint64_t episode_seed_base = mix_seed(mix_seed(seed, 0xF17), gen_stream);

    std::vector<double> fitnesses(pop.size(), kFailureFitness);
    const auto eval_range = [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        fitnesses[k] = evaluate_candidate(initial, pop[k].params, env, fitness, noise,
                                          episode_seed_base);
      }
    };

    if (workers == 1 || pop.size() < 2) {
      eval_range(0, pop.size());
    } else {
      std::vector<std::thread> threads;
      const std::size_t chunk = (pop.size() + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(pop.size(), begin + chunk);
        if (begin >= end) break;
        threads.emplace_back(eval_range, begin, end);
      }
      for (auto& t : threads) t.join();
    }

    double gen_best = -std::numeric_limits<double>::infinity();
    double gen_sum = 0.0;
    for (std::size_t k = 0; k < pop.size(); ++k) {
      gen_sum += fitnesses[k];
      if (fitnesses[k] > gen_best) gen_best = fitnesses[k];
      if (fitnesses[k] > result.best_fitness) {
        result.best_fitness = fitnesses[k];
        result.policy.params = pop[k].params;
      }
    }

    state = snes_step(state, pop, fitnesses);

    GenerationRecord rec;
    rec.generation = gen;
    rec.best_fitness = gen_best;
    rec.mean_fitness = gen_sum / pop.size();
    rec.best_so_far = result.best_fitness;
    rec.sigma_min = *std::min_element(state.sigma.begin(), state.sigma.end());
    rec.sigma_max = *std::max_element(state.sigma.begin(), state.sigma.end());
    rec.sigma_mean = std::accumulate(state.sigma.begin(), state.sigma.end(), 0.0) /
                     state.sigma.size();
    result.log.push_back(rec);
    if (on_generation) on_generation(rec);
  }

  // Final selection: the search-distribution mean aggregates the whole run and
  // often evaluates better than any single (noise-lucky) candidate. Score both
  // on common seeds and keep the winner.
  const std::uint64_t final_seed = mix_seed(seed, 0xF1A1);
  const double best_candidate_fitness =
      evaluate_candidate(initial, result.policy.params, env, fitness, noise, final_seed);
  const double mean_fitness =
      evaluate_candidate(initial, state.mean, env, fitness, noise, final_seed);
  if (mean_fitness > best_candidate_fitness) {
    result.policy.params = state.mean;
    result.best_fitness = mean_fitness;
  } else {
    result.best_fitness = best_candidate_fitness;
  }
  return result;
}

}  // namespace upswing::evo
