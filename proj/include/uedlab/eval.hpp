#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "uedlab/env.hpp"
#include "uedlab/policy.hpp"

namespace ued {

struct TestLevel {
  std::string name;
  GridLevel level;
};

/// Eight hand-designed mazes on the default 11x11 grid.
const std::vector<TestLevel>& default_test_suite();
/// Every *.lvl file in `dir`, named by file stem and sorted by name.
std::vector<TestLevel> load_test_suite(const std::string& dir);
/// Throws InvalidLevel for unsolvable levels and InvalidArgument for empty
/// suites, duplicate names or levels that do not fit `env`.
void validate_suite(const std::vector<TestLevel>& suite, const EnvConfig& env);

struct EvalOptions {
  int episodes = 10;
  bool stochastic = false;
  std::uint64_t seed = 0;
};

struct LevelStats {
  double solved_rate = 0.0;
  double mean_return = 0.0;
};

using ActionFn = std::function<Action(const EnvState&, const Observation&)>;

LevelStats run_episodes(const ActionFn& actor, const GridLevel& level, const EnvConfig& env, int episodes);
/// Zero-shot rollouts; greedy unless options.stochastic.
LevelStats evaluate_level(const PolicyParams& policy, const GridLevel& level, const EnvConfig& env,
                          const EvalOptions& options);
double solved_rate(const PolicyParams& policy, const GridLevel& level, const EnvConfig& env,
                   const EvalOptions& options = {});

struct LevelResult {
  std::string name;
  double solved_rate = 0.0;
  double mean_return = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<LevelResult> levels;
  std::vector<double> solved_rates() const;
};

RunRecord evaluate_policy(const PolicyParams& policy, const std::vector<TestLevel>& suite, const EnvConfig& env,
                          const EvalOptions& options);
/// Throws InvalidArgument when the checkpoint input size does not match env.
RunRecord evaluate_checkpoint(const std::string& checkpoint, const std::vector<TestLevel>& suite,
                              const EnvConfig& env, const EvalOptions& options);
/// level,seed,solved_rate,mean_return
std::string run_record_csv(const RunRecord& record);
RunRecord parse_run_record_csv(const std::string& text);

/// (s - lo) / (hi - lo) clipped to [0, 1].
std::vector<double> min_max_normalize(std::span<const double> scores, double lo, double hi);
/// Mean after dropping floor(n/4) values from each end of the sorted list.
double iqm(std::span<const double> scores);
/// Mean of max(0, target - s).
double optimality_gap(std::span<const double> scores, double target = 1.0);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::span<const double> values, double q);

struct RunSummary {
  std::string run;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<std::string> level_names;
  std::vector<double> solved_rates;
};

struct RunScore {
  std::string run;
  std::string algorithm;
  std::uint64_t seed = 0;
  double iqm = 0.0;
  double optimality_gap = 0.0;
  double mean = 0.0;
};

struct AlgorithmAggregate {
  std::string algorithm;
  std::size_t runs = 0;
  double iqm = 0.0;             // over all normalized (run, level) scores
  double optimality_gap = 0.0;
  double mean = 0.0;
  std::vector<double> level_median;
  std::vector<double> level_iqr;
};

struct AggregateReport {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::string> level_names;
  std::vector<RunScore> runs;
  std::vector<AlgorithmAggregate> algorithms;
};

/// All runs must cover the same levels in the same order. Run and pooled
/// scores fall back to the plain mean below 4 values.
AggregateReport aggregate_runs(const std::vector<RunSummary>& runs, double lo = 0.0, double hi = 1.0);
/// One row per run followed by one row per algorithm.
std::string aggregate_csv(const AggregateReport& report);

}  // namespace ued
