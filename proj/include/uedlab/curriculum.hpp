#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uedlab/env.hpp"
#include "uedlab/levelgen.hpp"
#include "uedlab/ot.hpp"
#include "uedlab/policy.hpp"
#include "uedlab/ppo.hpp"
#include "uedlab/rng.hpp"
#include "uedlab/rollout.hpp"
#include "uedlab/samples.hpp"

namespace ued {

enum class Strategy { dr, minimax, plr, diplr_minus, diplr };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);
/// Strategies that keep a level buffer and replay from it.
bool uses_buffer(Strategy s);

struct TeacherConfig {
  Strategy strategy = Strategy::diplr;
  double rho = 0.5;              // diversity weight in the replay mixture
  double beta = 1.0;             // rank temperature
  double staleness_coef = 0.1;   // mixing weight of the staleness distribution
  double replay_threshold = 0.5; // generate when epsilon >= threshold
  int buffer_size = 32;
  int minimax_search_budget = 20;
  int score_episodes = 4;
  int refresh_every = 1;

  /// rho as seen by the replay mixture: 0 for plr, 1 for diplr_minus.
  double effective_rho() const;
  void validate() const;
};

struct BufferEntry {
  std::uint64_t id = 0;
  GridLevel level;
  std::string key;  // canonical serialization
  double regret_score = 0.0;
  double distance_score = 0.0;
  SampleSet samples;
  std::uint64_t last_scored_at = 0;
  std::uint64_t episode_count = 0;
};

BufferEntry make_entry(std::uint64_t id, GridLevel level);

class LevelBuffer {
 public:
  explicit LevelBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool full() const { return entries_.size() >= capacity_; }

  const std::vector<BufferEntry>& entries() const { return entries_; }
  BufferEntry& at(std::size_t i) { return entries_.at(i); }
  const BufferEntry& at(std::size_t i) const { return entries_.at(i); }

  bool contains(const std::string& key) const;
  /// Throws InvalidArgument when full or when the level is already present.
  void insert(BufferEntry entry);
  BufferEntry erase(std::size_t index);

 private:
  std::size_t capacity_;
  std::vector<BufferEntry> entries_;
};

/// Minimum level distance from `candidate` to the buffer entries, skipping
/// `exclude`. Throws InvalidArgument when nothing is left to compare with.
double distance_to_buffer(const SampleSet& candidate, const LevelBuffer& buffer,
                          std::optional<std::size_t> exclude, const DistanceConfig& config);

/// P_i proportional to rank_i^-beta with rank 1 for the largest score; tied
/// scores share the average of their ranks.
std::vector<double> rank_prioritization(std::span<const double> scores, double beta);

/// Normalized age since last scoring; uniform when every age is zero.
std::vector<double> staleness_weights(std::span<const std::uint64_t> last_scored_at, std::uint64_t now);
std::vector<double> staleness_weights(const LevelBuffer& buffer, std::uint64_t now);

struct ReplayScores {
  std::vector<double> regret;
  std::vector<double> distance;
  std::vector<std::uint64_t> last_scored_at;

  static ReplayScores of(const LevelBuffer& buffer);
  void push(const BufferEntry& e);
};

/// (1 - rho_s) * (rho * P_D + (1 - rho) * P_R) + rho_s * P_stale
std::vector<double> replay_distribution(const ReplayScores& scores, const TeacherConfig& config, std::uint64_t now);
std::vector<double> replay_distribution(const LevelBuffer& buffer, const TeacherConfig& config, std::uint64_t now);

struct InsertOutcome {
  bool inserted = false;
  bool duplicate = false;
  std::optional<BufferEntry> evicted;
};

/// Inserts while below capacity. When full, the entry replaces the
/// minimum-probability resident if its own probability under the replay
/// distribution over residents plus the entry is larger than that minimum.
InsertOutcome try_insert(LevelBuffer& buffer, BufferEntry entry, const TeacherConfig& config, std::uint64_t now);

struct ScoringContext {
  EnvConfig env;
  GaeConfig gae;
  DistanceConfig distance;
  int episodes = 4;
};

/// Stop-gradient rollouts on the entry's level; refreshes regret and samples.
void score_entry(BufferEntry& entry, const PolicyParams& policy, const ScoringContext& ctx,
                 std::uint64_t now, Rng& rng);

/// Symmetric matrix of level distances between all buffer entries.
std::vector<double> pairwise_distances(const LevelBuffer& buffer, const DistanceConfig& config);

/// Mean off-diagonal entry of a pairwise matrix (0 for fewer than 2 entries).
double mean_pairwise(const std::vector<double>& matrix, std::size_t n);

/// Rescores every entry under `policy` and recomputes every distance score
/// against the rest of the buffer. Returns the mean pairwise distance.
double refresh_trajectory_buffer(LevelBuffer& buffer, const PolicyParams& policy, const ScoringContext& ctx,
                                 std::uint64_t now, Rng& rng);

struct MinimaxSearch {
  std::vector<GridLevel> candidates;
  std::vector<double> mean_returns;
  std::size_t chosen = 0;
};

/// Generate-and-mutate search keeping the candidate with the lowest mean
/// return under the current policy.
MinimaxSearch minimax_search(const PolicyParams& policy, const GeneratorConfig& gen, const EnvConfig& env,
                             int budget, int episodes, Rng& generation, Rng& rollout);

GridLevel propose_level(Strategy strategy, const PolicyParams& policy, const TeacherConfig& teacher,
                        const GeneratorConfig& gen, const EnvConfig& env, Rng& generation, Rng& rollout);

struct TrainingConfig {
  TeacherConfig teacher;
  EnvConfig env;
  GeneratorConfig generator;
  PpoConfig ppo;
  GaeConfig gae;
  DistanceConfig distance;
  NetworkShape network;  // input is derived from env
  int total_updates = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingHooks {
  /// One JSON record per update.
  std::function<void(const nlohmann::json&)> on_record;
  /// Called after each update with the current state.
  std::function<void(std::uint64_t update, const PolicyParams&, const LevelBuffer&)> on_update_end;
};

struct TrainingResult {
  PolicyParams policy;
  LevelBuffer buffer{1};
  std::uint64_t updates = 0;
};

/// Teacher-student loop. Buffer-based strategies generate or replay each
/// update; dr and minimax train directly on the proposed level.
TrainingResult run_training(const TrainingConfig& config, const TrainingHooks& hooks = {});

/// Policy for a training configuration, initialized from the run seed.
PolicyParams initial_policy(const TrainingConfig& config);

}  // namespace ued
