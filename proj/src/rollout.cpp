#include "uedlab/rollout.hpp"

#include <algorithm>
#include <cmath>

#include "uedlab/error.hpp"
#include "uedlab/levelgen.hpp"

namespace ued {

void GaeConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gae gamma must lie in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidArgument("gae lambda must lie in (0, 1]");
}

std::vector<double> TrajectoryBatch::episode_returns() const {
  std::vector<double> out;
  std::size_t begin = 0;
  for (std::size_t end : episode_ends) {
    double total = 0.0;
    for (std::size_t t = begin; t < end; ++t) total += steps[t].reward;
    out.push_back(total);
    begin = end;
  }
  return out;
}

void recompute_td_errors(TrajectoryBatch& batch) {
  std::size_t begin = 0;
  for (std::size_t end : batch.episode_ends) {
    for (std::size_t t = begin; t < end; ++t) {
      StepRecord& s = batch.steps[t];
      const double next_value = (t + 1 < end) ? batch.steps[t + 1].value : 0.0;
      s.td_error = s.reward + batch.gamma * next_value * (s.done ? 0.0 : 1.0) - s.value;
    }
    begin = end;
  }
}

namespace {

void run_episode(const PolicyParams& params, const GridLevel& level, const EnvConfig& config,
                 Rng& rng, const RolloutOptions& options, TrajectoryBatch& batch) {
  auto [state, obs] = reset(level, config);
  std::vector<double> feat(batch.feature_size);
  for (;;) {
    encode_observation(obs, feat);
    const ActResult a = options.greedy ? act_greedy(params, feat) : act(params, feat, rng);
    StepResult r = step(state, a.action, level, config);
    batch.features.insert(batch.features.end(), feat.begin(), feat.end());
    batch.steps.push_back({a.action, a.log_prob, r.reward, a.value, r.done, 0.0});
    state = r.state;
    obs = std::move(r.observation);
    if (r.done) break;
  }
  batch.episode_ends.push_back(batch.steps.size());
}

TrajectoryBatch empty_batch(const PolicyParams& params, const GridLevel& level,
                            const EnvConfig& config, bool for_update) {
  config.validate();
  validate_level(level);
  TrajectoryBatch batch;
  batch.feature_size = config.feature_size();
  if (batch.feature_size != static_cast<std::size_t>(params.shape.input))
    throw InvalidArgument("policy input size " + std::to_string(params.shape.input) +
                          " does not match observation features " + std::to_string(batch.feature_size));
  batch.level_id = serialize_level(level);
  batch.gamma = config.gamma;
  batch.for_update = for_update;
  batch.policy_version = params.update_count;
  return batch;
}

}  // namespace

TrajectoryBatch collect_trajectories(const PolicyParams& params, const GridLevel& level,
                                     const EnvConfig& config, int n_episodes, bool update_policy,
                                     Rng& rng, RolloutOptions options) {
  if (n_episodes < 1) throw InvalidArgument("n_episodes must be >= 1");
  TrajectoryBatch batch = empty_batch(params, level, config, update_policy);
  for (int e = 0; e < n_episodes; ++e) run_episode(params, level, config, rng, options, batch);
  recompute_td_errors(batch);
  return batch;
}

TrajectoryBatch collect_steps(const PolicyParams& params, const GridLevel& level,
                              const EnvConfig& config, int min_steps, Rng& rng) {
  if (min_steps < 1) throw InvalidArgument("min_steps must be >= 1");
  TrajectoryBatch batch = empty_batch(params, level, config, true);
  while (batch.size() < static_cast<std::size_t>(min_steps))
    run_episode(params, level, config, rng, {}, batch);
  recompute_td_errors(batch);
  return batch;
}

double positive_value_loss(const TrajectoryBatch& batch, const GaeConfig& gae) {
  gae.validate();
  if (batch.episode_ends.empty()) throw InvalidArgument("positive value loss needs at least one episode");
  const double discount = gae.gamma * gae.lambda;
  double total = 0.0;
  std::size_t begin = 0;
  for (std::size_t end : batch.episode_ends) {
    if (end <= begin) throw InvalidArgument("empty episode in batch");
    double running = 0.0;
    double clipped = 0.0;
    for (std::size_t t = end; t-- > begin;) {
      running = batch.steps[t].td_error + discount * running;
      clipped += std::max(running, 0.0);
    }
    total += clipped / static_cast<double>(end - begin);
    begin = end;
  }
  return total / static_cast<double>(batch.episode_ends.size());
}

double regret_max_minus_mean(const TrajectoryBatch& batch) {
  if (batch.episode_ends.size() < 2) throw InvalidArgument("regret needs at least two episodes");
  const auto returns = batch.episode_returns();
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(returns.size());
  return std::max(0.0, *std::max_element(returns.begin(), returns.end()) - mean);
}

SampleSet occupancy_samples(const TrajectoryBatch& batch) {
  if (batch.steps.empty()) throw InvalidArgument("occupancy samples need a non-empty batch");
  const std::size_t dim = batch.feature_size + kNumActions;
  std::vector<double> coords;
  coords.reserve(dim * batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto f = batch.features_at(t);
    coords.insert(coords.end(), f.begin(), f.end());
    for (int k = 0; k < kNumActions; ++k)
      coords.push_back(static_cast<int>(batch.steps[t].action) == k ? 1.0 : 0.0);
  }
  return SampleSet::uniform(dim, std::move(coords));
}

std::vector<double> gae_advantages(const TrajectoryBatch& batch, const GaeConfig& gae) {
  std::vector<double> adv(batch.size(), 0.0);
  std::size_t begin = 0;
  for (std::size_t end : batch.episode_ends) {
    double running = 0.0;
    for (std::size_t t = end; t-- > begin;) {
      running = batch.steps[t].td_error + gae.gamma * gae.lambda * running;
      adv[t] = running;
    }
    begin = end;
  }
  return adv;
}

}  // namespace ued
