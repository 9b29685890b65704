#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uedlab/env.hpp"
#include "uedlab/policy.hpp"
#include "uedlab/rng.hpp"
#include "uedlab/samples.hpp"

namespace ued {

struct GaeConfig {
  double gamma = 0.995;
  double lambda = 0.95;

  void validate() const;
};

struct StepRecord {
  Action action = Action::forward;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  double td_error = 0.0;
};

/// Rollout data for one level. Features are stored row-major, one row per
/// step. `episode_ends` holds exclusive end indices.
struct TrajectoryBatch {
  std::string level_id;
  std::size_t feature_size = 0;
  std::vector<double> features;
  std::vector<StepRecord> steps;
  std::vector<std::size_t> episode_ends;
  double gamma = 0.995;  // discount used for td_error
  bool for_update = false;
  std::uint64_t policy_version = 0;

  std::size_t size() const { return steps.size(); }
  std::size_t episode_count() const { return episode_ends.size(); }
  std::span<const double> features_at(std::size_t i) const {
    return {features.data() + i * feature_size, feature_size};
  }
  std::vector<double> episode_returns() const;
};

/// Recomputes every td_error from stored rewards, values and done flags.
void recompute_td_errors(TrajectoryBatch& batch);

struct RolloutOptions {
  bool greedy = false;
};

/// Runs `n_episodes` complete episodes. With `update_policy` false the batch
/// is marked scoring-only and ppo_update refuses it.
TrajectoryBatch collect_trajectories(const PolicyParams& params, const GridLevel& level,
                                     const EnvConfig& config, int n_episodes, bool update_policy,
                                     Rng& rng, RolloutOptions options = {});

/// Runs complete episodes until at least `min_steps` steps are collected.
TrajectoryBatch collect_steps(const PolicyParams& params, const GridLevel& level,
                              const EnvConfig& config, int min_steps, Rng& rng);

/// Mean over episodes of (1/T) * sum_t max(sum_{k>=t} (gamma*lambda)^(k-t) delta_k, 0),
/// with T the episode length.
double positive_value_loss(const TrajectoryBatch& batch, const GaeConfig& gae);

/// Max episode return minus mean episode return (undiscounted).
double regret_max_minus_mean(const TrajectoryBatch& batch);

/// One point per step: observation features followed by a one-hot action.
SampleSet occupancy_samples(const TrajectoryBatch& batch);

/// Signed GAE advantages, episode by episode.
std::vector<double> gae_advantages(const TrajectoryBatch& batch, const GaeConfig& gae);

}  // namespace ued
