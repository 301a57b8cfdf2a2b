#pragma once

#include <cstdint>
#include <string>

#include "upswing/policy.hpp"

namespace upswing::harness {

// Binary policy snapshot. Layout: magic "EVPC1", u32 format version, length-
// prefixed metadata JSON, u64 parameter count, raw little-endian doubles,
// FNV-1a 64 checksum of the parameter bytes. No timestamps: identical inputs
// produce byte-identical files.
struct Checkpoint {
  std::string system;   // cartpole | acrobot | pendubot
  std::string phase;    // rl | evolved
  policy::PolicyKind kind = policy::PolicyKind::Gaussian;
  nn::MlpArchitecture arch;
  double action_scale = 1.0;
  nn::ParamVector params;
  std::uint64_t seed = 0;
  double noise_variance = -1.0;  // measured pre-squash variance; < 0 when absent
  std::string created_by = "upswing 1.0";
};

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

policy::Policy policy_from_checkpoint(const Checkpoint& cp);
Checkpoint checkpoint_from_policy(const policy::Policy& p, const std::string& system,
                                  const std::string& phase, std::uint64_t seed,
                                  double noise_variance);

}  // namespace upswing::harness
