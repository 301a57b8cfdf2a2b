#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "upswing/nn.hpp"
#include "upswing/rng.hpp"

namespace upswing::policy {

enum class PolicyKind {
  Gaussian,       // SAC actor: network outputs [mean; log_std] per action dim
  Deterministic,  // TD3/DDPG actor: network outputs the pre-squash action
};

struct Policy {
  PolicyKind kind = PolicyKind::Gaussian;
  nn::MlpArchitecture arch;
  nn::ParamVector params;
  double action_scale = 1.0;  // physical actuator limit (N or N*m)
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  int action_dim() const {
    return kind == PolicyKind::Gaussian ? arch.output_dim / 2 : arch.output_dim;
  }
};

Policy make_gaussian_policy(int obs_dim, const std::vector<int>& hidden, int action_dim,
                            double action_scale, std::uint64_t seed);
Policy make_deterministic_policy(int obs_dim, const std::vector<int>& hidden, int action_dim,
                                 double action_scale, std::uint64_t seed);

void validate(const Policy& p);

// Noise injected in pre-squash space during evolutionary fitness evaluation.
struct NoiseInjectionConfig {
  double sigma = 0.0;        // std deviation of the pre-squash perturbation
  double atanh_clip = 1e-6;  // safety margin before atanh at saturated actions
};

struct ActionSample {
  std::vector<double> action;  // physical units, in [-scale, +scale]
  double log_prob;             // includes the tanh change-of-variables correction
};

// action = scale * tanh(mu + sigma * eps), eps ~ N(0, I).
ActionSample sample_action(const Policy& p, std::span<const double> obs, Rng& rng);

// scale * tanh(mu(obs)); works for both policy kinds.
std::vector<double> greedy_action(const Policy& p, std::span<const double> obs);

// Greedy action, unsquashed, perturbed by N(0, sigma^2), squashed again.
std::vector<double> noisy_greedy_action(const Policy& p, std::span<const double> obs,
                                        const NoiseInjectionConfig& noise, Rng& rng);

// Deterministic core of the injection, on a unit-scale action in [-1, 1]:
// tanh(atanh(clamp(a, -1+clip, 1-clip)) + eta).
double inject_presquash_noise(double action_unit, double eta, double atanh_clip = 1e-6);

// Log density of a physical action under the squashed Gaussian (Gaussian policies only).
double action_log_prob(const Policy& p, std::span<const double> obs,
                       std::span<const double> action);

// diag Sigma(obs) in pre-squash space; all zeros for deterministic policies.
std::vector<double> action_variance(const Policy& p, std::span<const double> obs);

// Mean over a set of visited observations of the mean per-dim policy variance.
double measure_action_variance(const Policy& p,
                               std::span<const std::vector<double>> observations);

// log(1 - tanh(u)^2), computed without catastrophic cancellation.
double log_one_minus_tanh_sq(double u);

}  // namespace upswing::policy
