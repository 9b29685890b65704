#pragma once

#include <span>
#include <vector>

#include "uedlab/policy.hpp"
#include "uedlab/rng.hpp"
#include "uedlab/rollout.hpp"

namespace ued {

struct PpoConfig {
  double clip_ratio = 0.2;
  int epochs = 4;
  int minibatch_size = 64;
  double learning_rate = 1e-3;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  int steps_per_rollout = 256;
  bool normalize_advantages = true;

  void validate() const;
};

/// One training example for the clipped surrogate.
struct PpoSample {
  std::span<const double> features;
  Action action = Action::forward;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double target_return = 0.0;
};

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

/// Total loss = -mean(clipped surrogate) + value_coef * mean((V - R)^2)
///              - entropy_coef * mean(entropy).
/// Gradient w.r.t. the flat weight vector is written into `grad` (resized).
LossStats ppo_loss(const PolicyParams& params, std::span<const PpoSample> samples,
                   const PpoConfig& config, std::vector<double>& grad);

struct PpoUpdateResult {
  PolicyParams params;
  LossStats stats;  // averaged over minibatches
};

/// Clipped-surrogate PPO with Adam. Refuses batches collected for scoring.
PpoUpdateResult ppo_update(const PolicyParams& params, const TrajectoryBatch& batch,
                           const PpoConfig& ppo, const GaeConfig& gae, Rng& rng);

}  // namespace ued
