#include "uedlab/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uedlab/error.hpp"

namespace ued {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::dr: return "dr";
    case Strategy::minimax: return "minimax";
    case Strategy::plr: return "plr";
    case Strategy::diplr_minus: return "diplr_minus";
    case Strategy::diplr: return "diplr";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  for (Strategy s : {Strategy::dr, Strategy::minimax, Strategy::plr, Strategy::diplr_minus, Strategy::diplr})
    if (name == strategy_name(s)) return s;
  throw InvalidArgument("unknown strategy '" + name + "' (expected dr, minimax, plr, diplr_minus or diplr)");
}

bool uses_buffer(Strategy s) { return s == Strategy::plr || s == Strategy::diplr_minus || s == Strategy::diplr; }

double TeacherConfig::effective_rho() const {
  switch (strategy) {
    case Strategy::plr: return 0.0;
    case Strategy::diplr_minus: return 1.0;
    default: return rho;
  }
}

void TeacherConfig::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in [0, 1]");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be > 0");
  if (!(staleness_coef >= 0.0 && staleness_coef < 1.0)) throw InvalidArgument("staleness_coef must lie in [0, 1)");
  if (!(replay_threshold >= 0.0 && replay_threshold <= 1.0))
    throw InvalidArgument("replay_threshold must lie in [0, 1]");
  if (buffer_size < 1) throw InvalidArgument("buffer_size must be >= 1");
  if (minimax_search_budget < 1) throw InvalidArgument("minimax_search_budget must be >= 1");
  if (score_episodes < 1) throw InvalidArgument("score_episodes must be >= 1");
  if (refresh_every < 1) throw InvalidArgument("refresh_every must be >= 1");
}

BufferEntry make_entry(std::uint64_t id, GridLevel level) {
  BufferEntry e;
  e.id = id;
  e.key = serialize_level(level);
  e.level = std::move(level);
  return e;
}

LevelBuffer::LevelBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidArgument("buffer capacity must be positive");
  entries_.reserve(capacity_);
}

bool LevelBuffer::contains(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const BufferEntry& e) { return e.key == key; });
}

void LevelBuffer::insert(BufferEntry entry) {
  if (full()) throw InvalidArgument("level buffer is full");
  if (contains(entry.key)) throw InvalidArgument("level is already in the buffer");
  entries_.push_back(std::move(entry));
}

BufferEntry LevelBuffer::erase(std::size_t index) {
  BufferEntry out = std::move(entries_.at(index));
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(index));
  return out;
}

double distance_to_buffer(const SampleSet& candidate, const LevelBuffer& buffer,
                          std::optional<std::size_t> exclude, const DistanceConfig& config) {
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t k = 0; k < buffer.size(); ++k) {
    if (exclude && *exclude == k) continue;
    const BufferEntry& e = buffer.at(k);
    if (e.samples.empty()) throw InvalidArgument("buffer entry " + std::to_string(e.id) + " has not been scored");
    best = std::min(best, level_distance(candidate, e.samples, config));
    any = true;
  }
  if (!any) throw InvalidArgument("distance to buffer needs at least one other entry");
  return best;
}

std::vector<double> rank_prioritization(std::span<const double> scores, double beta) {
  if (scores.empty()) throw InvalidArgument("rank prioritization needs at least one score");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be > 0");
  for (double s : scores)
    if (!std::isfinite(s)) throw InvalidArgument("rank prioritization needs finite scores");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> weights(n);
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k + 1;
    while (end < n && scores[order[end]] == scores[order[k]]) ++end;
    // Positions k..end-1 hold ranks k+1..end; ties share their mean.
    const double rank = 0.5 * static_cast<double>(k + 1 + end);
    const double w = std::pow(rank, -beta);
    for (std::size_t t = k; t < end; ++t) weights[order[t]] = w;
    k = end;
  }
  // Summing in rank order keeps the result independent of input order.
  double z = 0.0;
  for (std::size_t i : order) z += weights[i];
  for (double& w : weights) w /= z;
  return weights;
}

std::vector<double> staleness_weights(std::span<const std::uint64_t> last_scored_at, std::uint64_t now) {
  if (last_scored_at.empty()) throw InvalidArgument("staleness needs at least one entry");
  std::vector<double> w(last_scored_at.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = now > last_scored_at[i] ? static_cast<double>(now - last_scored_at[i]) : 0.0;
    total += w[i];
  }
  if (total == 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
  } else {
    for (double& x : w) x /= total;
  }
  return w;
}

std::vector<double> staleness_weights(const LevelBuffer& buffer, std::uint64_t now) {
  return staleness_weights(ReplayScores::of(buffer).last_scored_at, now);
}

ReplayScores ReplayScores::of(const LevelBuffer& buffer) {
  ReplayScores s;
  for (const auto& e : buffer.entries()) s.push(e);
  return s;
}

void ReplayScores::push(const BufferEntry& e) {
  regret.push_back(e.regret_score);
  distance.push_back(e.distance_score);
  last_scored_at.push_back(e.last_scored_at);
}

std::vector<double> replay_distribution(const ReplayScores& scores, const TeacherConfig& config, std::uint64_t now) {
  const double rho = config.effective_rho();
  const double rho_s = config.staleness_coef;
  const std::size_t n = scores.regret.size();
  if (n == 0) throw InvalidArgument("replay distribution needs a non-empty buffer");
  std::vector<double> p(n, 0.0);
  if (rho > 0.0) {
    const auto pd = rank_prioritization(scores.distance, config.beta);
    for (std::size_t i = 0; i < n; ++i) p[i] += rho * pd[i];
  }
  if (rho < 1.0) {
    const auto pr = rank_prioritization(scores.regret, config.beta);
    for (std::size_t i = 0; i < n; ++i) p[i] += (1.0 - rho) * pr[i];
  }
  if (rho_s > 0.0) {
    const auto ps = staleness_weights(scores.last_scored_at, now);
    for (std::size_t i = 0; i < n; ++i) p[i] = (1.0 - rho_s) * p[i] + rho_s * ps[i];
  }
  return p;
}

std::vector<double> replay_distribution(const LevelBuffer& buffer, const TeacherConfig& config, std::uint64_t now) {
  return replay_distribution(ReplayScores::of(buffer), config, now);
}

InsertOutcome try_insert(LevelBuffer& buffer, BufferEntry entry, const TeacherConfig& config, std::uint64_t now) {
  InsertOutcome out;
  if (buffer.contains(entry.key)) {
    out.duplicate = true;
    return out;
  }
  if (!buffer.full()) {
    buffer.insert(std::move(entry));
    out.inserted = true;
    return out;
  }
  ReplayScores scores = ReplayScores::of(buffer);
  scores.push(entry);
  const auto p = replay_distribution(scores, config, now);
  const std::size_t n = buffer.size();
  std::size_t weakest = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (p[i] < p[weakest]) weakest = i;
  if (p[n] > p[weakest]) {
    out.evicted = buffer.erase(weakest);
    buffer.insert(std::move(entry));
    out.inserted = true;
  }
  return out;
}

void score_entry(BufferEntry& entry, const PolicyParams& policy, const ScoringContext& ctx, std::uint64_t now,
                 Rng& rng) {
  const TrajectoryBatch batch = collect_trajectories(policy, entry.level, ctx.env, ctx.episodes, false, rng);
  entry.regret_score = positive_value_loss(batch, ctx.gae);
  entry.samples = occupancy_samples(batch);
  entry.last_scored_at = now;
  entry.episode_count += static_cast<std::uint64_t>(ctx.episodes);
}

std::vector<double> pairwise_distances(const LevelBuffer& buffer, const DistanceConfig& config) {
  const std::size_t n = buffer.size();
  std::vector<SampleSet> sub;
  sub.reserve(n);
  for (const auto& e : buffer.entries()) {
    if (e.samples.empty()) throw InvalidArgument("buffer entry " + std::to_string(e.id) + " has not been scored");
    sub.push_back(subsample(e.samples, config.max_samples, config.seed));
  }
  EmdOptions emd_opts = config.emd;
  emd_opts.compute_plan = false;
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      // Same arithmetic as level_distance on already subsampled sets.
      const double v = (config.sinkhorn_fallback && sub[i].size() * sub[j].size() > config.emd.max_cells)
                           ? sinkhorn(sub[i], sub[j], config.exponent, config.sinkhorn).distance
                           : emd(sub[i], sub[j], config.exponent, emd_opts).distance;
      d[i * n + j] = d[j * n + i] = v;
    }
  return d;
}

double mean_pairwise(const std::vector<double>& matrix, std::size_t n) {
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += matrix[i * n + j];
  return s / static_cast<double>(n * (n - 1) / 2);
}

double refresh_trajectory_buffer(LevelBuffer& buffer, const PolicyParams& policy, const ScoringContext& ctx,
                                 std::uint64_t now, Rng& rng) {
  for (std::size_t i = 0; i < buffer.size(); ++i) score_entry(buffer.at(i), policy, ctx, now, rng);
  const std::size_t n = buffer.size();
  const auto d = pairwise_distances(buffer, ctx.distance);
  for (std::size_t i = 0; i < n; ++i) {
    double best = n > 1 ? std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) best = std::min(best, d[i * n + k]);
    buffer.at(i).distance_score = best;
  }
  return mean_pairwise(d, n);
}

MinimaxSearch minimax_search(const PolicyParams& policy, const GeneratorConfig& gen, const EnvConfig& env,
                             int budget, int episodes, Rng& generation, Rng& rollout) {
  if (budget < 1) throw InvalidArgument("minimax search budget must be >= 1");
  MinimaxSearch out;
  out.candidates.push_back(random_level(gen, generation));
  if (budget == 1) {
    out.mean_returns.push_back(std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  auto evaluate = [&](const GridLevel& level) {
    const auto batch = collect_trajectories(policy, level, env, episodes, false, rollout);
    const auto returns = batch.episode_returns();
    return std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
  };
  out.mean_returns.push_back(evaluate(out.candidates[0]));
  for (int k = 1; k < budget; ++k) {
    GridLevel next = generation.uniform() < 0.5 ? random_level(gen, generation)
                                                : mutate_level(out.candidates[out.chosen], generation);
    const double r = evaluate(next);
    out.candidates.push_back(std::move(next));
    out.mean_returns.push_back(r);
    if (r < out.mean_returns[out.chosen]) out.chosen = out.candidates.size() - 1;
  }
  return out;
}

GridLevel propose_level(Strategy strategy, const PolicyParams& policy, const TeacherConfig& teacher,
                        const GeneratorConfig& gen, const EnvConfig& env, Rng& generation, Rng& rollout) {
  if (strategy == Strategy::minimax) {
    MinimaxSearch s = minimax_search(policy, gen, env, teacher.minimax_search_budget, teacher.score_episodes,
                                     generation, rollout);
    return std::move(s.candidates[s.chosen]);
  }
  return random_level(gen, generation);
}

void TrainingConfig::validate() const {
  teacher.validate();
  env.validate();
  generator.validate();
  ppo.validate();
  gae.validate();
  if (generator.width != env.width || generator.height != env.height)
    throw InvalidArgument("generator and environment grid sizes differ");
  if (network.hidden1 < 1 || network.hidden2 < 1) throw InvalidArgument("hidden layer sizes must be positive");
  if (total_updates < 1) throw InvalidArgument("total_updates must be >= 1");
  if (distance.max_samples < 1) throw InvalidArgument("distance max_samples must be >= 1");
}

PolicyParams initial_policy(const TrainingConfig& config) {
  NetworkShape shape = config.network;
  shape.input = static_cast<int>(config.env.feature_size());
  Rng init(derive_seed(config.seed, "init"));
  return init_policy(shape, init);
}

namespace {

using nlohmann::json;

json loss_json(const LossStats& s) {
  return {{"policy_loss", s.policy_loss}, {"value_loss", s.value_loss}, {"entropy", s.entropy},
          {"total", s.total},             {"approx_kl", s.approx_kl},   {"clip_fraction", s.clip_fraction},
          {"grad_norm", s.grad_norm}};
}

json buffer_json(const LevelBuffer& buffer, std::optional<double> mean_pairwise_distance) {
  double regret = 0.0, distance = 0.0;
  for (const auto& e : buffer.entries()) {
    regret += e.regret_score;
    distance += e.distance_score;
  }
  const double n = static_cast<double>(std::max<std::size_t>(buffer.size(), 1));
  json j = {{"size", buffer.size()}, {"mean_regret", regret / n}, {"mean_distance", distance / n}};
  j["mean_pairwise_distance"] = mean_pairwise_distance ? json(*mean_pairwise_distance) : json(nullptr);
  return j;
}

double mean_return(const TrajectoryBatch& batch) {
  const auto r = batch.episode_returns();
  return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

std::size_t sample_index(const std::vector<double>& p, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cum += p[i];
    if (u < cum) return i;
  }
  return p.size() - 1;
}

}  // namespace

TrainingResult run_training(const TrainingConfig& config, const TrainingHooks& hooks) {
  config.validate();
  SeedStreams streams = seed_streams(config.seed);
  TrainingResult result;
  result.policy = initial_policy(config);
  PolicyParams& policy = result.policy;
  const TeacherConfig& teacher = config.teacher;

  ScoringContext ctx{config.env, config.gae, config.distance, teacher.score_episodes};
  ctx.distance.seed = derive_seed(config.seed, "subsample") ^ config.distance.seed;
  std::uint64_t next_id = 0;

  auto emit = [&](const json& record) {
    if (hooks.on_record) hooks.on_record(record);
  };

  if (!uses_buffer(teacher.strategy)) {
    for (int u = 1; u <= config.total_updates; ++u) {
      GridLevel level = propose_level(teacher.strategy, policy, teacher, config.generator, config.env,
                                      streams.generation, streams.rollout);
      const std::uint64_t id = next_id++;
      const auto batch = collect_steps(policy, level, config.env, config.ppo.steps_per_rollout, streams.rollout);
      const double regret = positive_value_loss(batch, config.gae);
      auto upd = ppo_update(policy, batch, config.ppo, config.gae, streams.ppo);
      policy = std::move(upd.params);
      emit({{"update", u},
            {"strategy", strategy_name(teacher.strategy)},
            {"branch", "direct"},
            {"level_id", id},
            {"regret", regret},
            {"distance", nullptr},
            {"inserted", nullptr},
            {"evicted_id", nullptr},
            {"train_return", mean_return(batch)},
            {"loss", loss_json(upd.stats)},
            {"buffer", nullptr},
            {"policy_version", policy.update_count}});
      result.updates = static_cast<std::uint64_t>(u);
      if (hooks.on_update_end) hooks.on_update_end(result.updates, policy, result.buffer);
    }
    return result;
  }

  // Fill the buffer with N distinct generated levels and score them.
  LevelBuffer& buffer = result.buffer = LevelBuffer(static_cast<std::size_t>(teacher.buffer_size));
  while (!buffer.full()) {
    BufferEntry e = make_entry(next_id, random_level(config.generator, streams.generation));
    if (buffer.contains(e.key)) continue;
    ++next_id;
    score_entry(e, policy, ctx, 0, streams.rollout);
    buffer.insert(std::move(e));
  }
  double pairwise = refresh_trajectory_buffer(buffer, policy, ctx, 0, streams.rollout);

  for (int u = 1; u <= config.total_updates; ++u) {
    const auto now = static_cast<std::uint64_t>(u);
    const double epsilon = streams.teacher.uniform();
    json record = {{"update", u}, {"strategy", strategy_name(teacher.strategy)}, {"epsilon", epsilon}};
    std::optional<BufferEntry> candidate;

    if (epsilon >= teacher.replay_threshold) {
      BufferEntry e = make_entry(next_id++, propose_level(teacher.strategy, policy, teacher, config.generator,
                                                          config.env, streams.generation, streams.rollout));
      score_entry(e, policy, ctx, now, streams.rollout);
      record["branch"] = "generate";
      record["level_id"] = e.id;
      record["train_return"] = nullptr;
      record["loss"] = nullptr;
      candidate = std::move(e);
    } else {
      const auto p = replay_distribution(buffer, teacher, now);
      const std::size_t j = sample_index(p, streams.teacher);
      BufferEntry& entry = buffer.at(j);
      const auto batch = collect_steps(policy, entry.level, config.env, config.ppo.steps_per_rollout, streams.rollout);
      auto upd = ppo_update(policy, batch, config.ppo, config.gae, streams.ppo);
      policy = std::move(upd.params);
      entry.regret_score = positive_value_loss(batch, config.gae);
      entry.samples = occupancy_samples(batch);
      entry.last_scored_at = now;
      entry.episode_count += batch.episode_count();
      record["branch"] = "replay";
      record["level_id"] = entry.id;
      record["replay_probability"] = p[j];
      record["train_return"] = mean_return(batch);
      record["loss"] = loss_json(upd.stats);
    }

    std::optional<double> refreshed;
    if (u % teacher.refresh_every == 0) {
      pairwise = refresh_trajectory_buffer(buffer, policy, ctx, now, streams.rollout);
      refreshed = pairwise;
    }

    if (candidate) {
      candidate->distance_score = distance_to_buffer(candidate->samples, buffer, std::nullopt, ctx.distance);
      record["regret"] = candidate->regret_score;
      record["distance"] = candidate->distance_score;
      const InsertOutcome ins = try_insert(buffer, std::move(*candidate), teacher, now);
      record["inserted"] = ins.inserted;
      record["duplicate"] = ins.duplicate;
      record["evicted_id"] = ins.evicted ? json(ins.evicted->id) : json(nullptr);
    } else {
      const std::uint64_t id = record["level_id"].get<std::uint64_t>();
      for (const auto& e : buffer.entries())
        if (e.id == id) {
          record["regret"] = e.regret_score;
          record["distance"] = e.distance_score;
        }
      record["inserted"] = nullptr;
      record["evicted_id"] = nullptr;
    }
    record["buffer"] = buffer_json(buffer, refreshed);
    record["policy_version"] = policy.update_count;
    emit(record);
    result.updates = now;
    if (hooks.on_update_end) hooks.on_update_end(now, policy, buffer);
  }
  return result;
}

}  // namespace ued
