#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uedlab/config.hpp"
#include "uedlab/eval.hpp"

namespace ued {

const char* version();

struct RunLayout {
  std::string root;
  std::string manifest() const { return root + "/manifest.json"; }
  std::string log() const { return root + "/log.jsonl"; }
  std::string eval() const { return root + "/eval.csv"; }
  std::string buffer_stats() const { return root + "/buffer_stats.csv"; }
  std::string checkpoints() const { return root + "/checkpoints"; }
  std::string buffers() const { return root + "/buffer"; }
};

struct ExperimentResult {
  std::string output_dir;
  std::uint64_t updates = 0;
  RunRecord final_eval;
  std::vector<std::string> checkpoints;
};

struct ExperimentOptions {
  /// Replace the artifacts of an earlier run in the same directory.
  bool overwrite = false;
  std::function<void(const nlohmann::json&)> on_record;
};

std::vector<TestLevel> resolve_suite(const ExperimentConfig& config);

/// Trains, checkpoints and evaluates into config.output_dir. The manifest is
/// written before the first update; on failure it records the error and the
/// checkpoints written so far stay in place.
ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentOptions& options = {});

/// One <id>.lvl per entry plus scores.csv.
void write_buffer_snapshot(const LevelBuffer& buffer, const std::string& dir);

/// Strategy, seed and the last evaluation found in a run directory.
RunSummary load_run_summary(const std::string& run_dir);
std::string compare_runs(const std::vector<std::string>& run_dirs, double lo = 0.0, double hi = 1.0);

/// Occupancy samples from stochastic rollouts of `policy` on `level`. The
/// grid size follows the level; the rollout seed mixes `seed` with the level.
SampleSet policy_samples(const PolicyParams& policy, const GridLevel& level, const ExperimentConfig& config,
                         std::uint64_t seed);
double policy_level_distance(const PolicyParams& policy, const GridLevel& a, const GridLevel& b,
                             const ExperimentConfig& config, std::uint64_t seed);
/// Square CSV: header "level,<names...>", one row per level.
std::string distance_matrix_csv(const PolicyParams& policy, const std::vector<TestLevel>& levels,
                                const ExperimentConfig& config, std::uint64_t seed);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace ued
