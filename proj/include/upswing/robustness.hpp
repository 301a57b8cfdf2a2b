#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "upswing/policy.hpp"
#include "upswing/scoring.hpp"
#include "upswing/sim.hpp"

namespace upswing::scoring {

// One perturbed evaluation: either a relative change to a physical parameter,
// or an added noise level.
struct Variation {
  enum class Kind { Param, ActionNoise, MeasurementNoise };
  Kind kind = Kind::Param;
  std::string param;        // m1|m2|l1|l2|b1|b2 for Kind::Param
  double value = 0.0;       // relative delta, or noise std (fraction of tau_max / rad)
};

struct RobustnessConfig {
  std::vector<Variation> variations;
  int episodes_per_variation = 1;
};

// Default battery: +-10% and +-20% on each of m1, m2, l1, l2, b1, b2;
// action noise {0.05, 0.1} * tau_max; measurement noise {0.01, 0.05} rad.
RobustnessConfig default_robustness_config();

void validate(const RobustnessConfig& cfg);

struct VariationOutcome {
  Variation variation;
  bool success = false;
};

struct RobustnessResult {
  double score = 1.0;  // fraction of successful variations; 1.0 for an empty battery
  std::vector<VariationOutcome> outcomes;
};

// Applies each variation to a copy of the environment (the policy is unchanged)
// and rolls one episode per variation/episode-seed; a variation succeeds when
// every episode achieves c_succ = 1. Deterministic given the seed; failures
// (including divergence) count as unsuccessful.
RobustnessResult robustness_score(const policy::Policy& p, const sim::EnvConfig& env,
                                  const RobustnessConfig& cfg, const CriteriaConfig& criteria,
                                  std::uint64_t seed, int workers = 1);

}  // namespace upswing::scoring
