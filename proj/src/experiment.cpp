#include "uedlab/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uedlab/error.hpp"
#include "uedlab/levelgen.hpp"

namespace ued {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string padded(std::uint64_t update) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "update_%06llu", static_cast<unsigned long long>(update));
  return buf;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

class Manifest {
 public:
  Manifest(std::string path, const ExperimentConfig& config) : path_(std::move(path)) {
    doc_["version"] = version();
    doc_["config"] = to_json(config);
    doc_["started_at"] = utc_now();
    doc_["finished_at"] = nullptr;
    doc_["status"] = "running";
    doc_["error"] = nullptr;
    doc_["updates_completed"] = 0;
    doc_["checkpoints"] = nlohmann::json::array();
    doc_["artifacts"] = {{"log", "log.jsonl"},
                         {"eval", "eval.csv"},
                         {"buffer_stats", "buffer_stats.csv"},
                         {"buffer_snapshots", "buffer"}};
    flush();
  }
  void checkpoint(const std::string& rel, std::uint64_t update) {
    doc_["checkpoints"].push_back(rel);
    doc_["updates_completed"] = update;
    flush();
  }
  void finish(const std::string& status, const std::string& error = "") {
    doc_["finished_at"] = utc_now();
    doc_["status"] = status;
    if (!error.empty()) doc_["error"] = error;
    flush();
  }

 private:
  void flush() { write_file_atomic(path_, doc_.dump(2) + "\n"); }
  std::string path_;
  nlohmann::json doc_;
};

void prepare_directory(const RunLayout& layout, bool overwrite) {
  if (fs::exists(layout.manifest())) {
    if (!overwrite) throw IoError("output directory already holds a run: " + layout.root);
    for (const auto& p : {layout.log(), layout.eval(), layout.buffer_stats(), layout.manifest()}) fs::remove(p);
    fs::remove_all(layout.checkpoints());
    fs::remove_all(layout.buffers());
  }
  fs::create_directories(layout.checkpoints());
}

}  // namespace

const char* version() { return "0.1.0"; }

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<TestLevel> resolve_suite(const ExperimentConfig& config) {
  if (config.test_suite == "default") return default_test_suite();
  return load_test_suite(config.test_suite);
}

void write_buffer_snapshot(const LevelBuffer& buffer, const std::string& dir) {
  fs::create_directories(dir);
  std::ostringstream scores;
  scores << "id,file,regret,distance,last_scored_at,episode_count\n";
  for (const auto& e : buffer.entries()) {
    const std::string file = std::to_string(e.id) + ".lvl";
    save_level(e.level, (fs::path(dir) / file).string());
    scores << e.id << ',' << file << ',' << fmt(e.regret_score) << ',' << fmt(e.distance_score) << ','
           << e.last_scored_at << ',' << e.episode_count << '\n';
  }
  write_file_atomic((fs::path(dir) / "scores.csv").string(), scores.str());
}

ExperimentResult run_experiment(const ExperimentConfig& input, const ExperimentOptions& options) {
  ExperimentConfig config = input;
  config.resolve();
  config.validate();
  const auto suite = resolve_suite(config);
  validate_suite(suite, config.training.env);

  RunLayout layout{config.output_dir};
  prepare_directory(layout, options.overwrite);
  Manifest manifest(layout.manifest(), config);

  ExperimentResult result;
  result.output_dir = config.output_dir;
  std::ofstream log(layout.log(), std::ios::binary | std::ios::trunc);
  std::ofstream eval(layout.eval(), std::ios::binary | std::ios::trunc);
  std::ofstream stats(layout.buffer_stats(), std::ios::binary | std::ios::trunc);
  if (!log || !eval || !stats) throw IoError("cannot create run files in " + layout.root);
  eval << "update,level,seed,solved_rate,mean_return\n";
  stats << "update,size,mean_regret,mean_distance,mean_pairwise_distance\n";

  EvalOptions eval_opts{config.eval_episodes, config.eval_stochastic, derive_seed(config.training.seed, "eval")};
  const bool buffered = uses_buffer(config.training.teacher.strategy);
  DistanceConfig pair_cfg = config.training.distance;
  pair_cfg.seed = derive_seed(config.training.seed, "snapshot");
  std::uint64_t last_saved = 0;

  auto save_point = [&](std::uint64_t update, const PolicyParams& policy, const LevelBuffer& buffer) {
    const std::string rel = "checkpoints/" + padded(update) + ".ckpt";
    save_checkpoint(policy, layout.root + "/" + rel);
    save_checkpoint(policy, layout.checkpoints() + "/latest.ckpt");
    result.checkpoints.push_back(rel);
    result.final_eval = evaluate_policy(policy, suite, config.training.env, eval_opts);
    for (const auto& l : result.final_eval.levels)
      eval << update << ',' << l.name << ',' << eval_opts.seed << ',' << fmt(l.solved_rate) << ','
           << fmt(l.mean_return) << '\n';
    eval.flush();
    if (buffered) {
      write_buffer_snapshot(buffer, layout.buffers() + "/" + padded(update));
      double regret = 0.0, distance = 0.0;
      for (const auto& e : buffer.entries()) {
        regret += e.regret_score;
        distance += e.distance_score;
      }
      const double n = static_cast<double>(buffer.size());
      const double pairwise = mean_pairwise(pairwise_distances(buffer, pair_cfg), buffer.size());
      stats << update << ',' << buffer.size() << ',' << fmt(regret / n) << ',' << fmt(distance / n) << ','
            << fmt(pairwise) << '\n';
      stats.flush();
    }
    manifest.checkpoint(rel, update);
    last_saved = update;
  };

  TrainingHooks hooks;
  hooks.on_record = [&](const nlohmann::json& record) {
    log << record.dump() << '\n';
    log.flush();
    if (options.on_record) options.on_record(record);
  };
  hooks.on_update_end = [&](std::uint64_t update, const PolicyParams& policy, const LevelBuffer& buffer) {
    if (config.eval_every > 0 && update % static_cast<std::uint64_t>(config.eval_every) == 0)
      save_point(update, policy, buffer);
  };

  try {
    TrainingResult trained = run_training(config.training, hooks);
    result.updates = trained.updates;
    if (last_saved != trained.updates) save_point(trained.updates, trained.policy, trained.buffer);
  } catch (const std::exception& e) {
    manifest.finish("failed", e.what());
    throw;
  }
  manifest.finish("completed");
  return result;
}

RunSummary load_run_summary(const std::string& run_dir) {
  RunLayout layout{run_dir};
  if (!fs::exists(layout.manifest())) throw IoError("no manifest.json in " + run_dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(layout.manifest()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(layout.manifest() + ": " + e.what(), 0, 0);
  }
  const ExperimentConfig config = config_from_json(manifest.at("config"));
  RunSummary s;
  s.run = fs::path(run_dir).lexically_normal().filename().string();
  if (s.run.empty()) s.run = fs::path(run_dir).lexically_normal().parent_path().filename().string();
  s.algorithm = strategy_name(config.training.teacher.strategy);
  s.seed = config.training.seed;

  std::istringstream in(read_file(layout.eval()));
  std::string line;
  std::getline(in, line);
  std::uint64_t last = 0;
  std::vector<std::pair<std::uint64_t, LevelResult>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 5) throw ParseError(layout.eval() + ": expected 5 columns", rows.size() + 2, 1);
    const std::uint64_t u = std::stoull(cols[0]);
    last = std::max(last, u);
    rows.push_back({u, {cols[1], std::stod(cols[3]), std::stod(cols[4])}});
  }
  if (rows.empty()) throw InvalidArgument("run " + run_dir + " has no evaluation records");
  for (const auto& [u, l] : rows)
    if (u == last) {
      s.level_names.push_back(l.name);
      s.solved_rates.push_back(l.solved_rate);
    }
  return s;
}

SampleSet policy_samples(const PolicyParams& policy, const GridLevel& level, const ExperimentConfig& config,
                         std::uint64_t seed) {
  EnvConfig env = config.training.env;
  env.width = level.width;
  env.height = level.height;
  env.validate();
  validate_level(level);
  if (policy.shape.input != static_cast<int>(env.feature_size()))
    throw InvalidArgument("policy expects " + std::to_string(policy.shape.input) + " input features, environment "
                          "produces " + std::to_string(env.feature_size()));
  Rng rng(derive_seed(seed, serialize_level(level)));
  const auto batch =
      collect_trajectories(policy, level, env, config.training.teacher.score_episodes, false, rng);
  return occupancy_samples(batch);
}

namespace {

DistanceConfig distance_config(const ExperimentConfig& config, std::uint64_t seed) {
  DistanceConfig d = config.training.distance;
  d.seed = derive_seed(seed, "subsample");
  return d;
}

}  // namespace

double policy_level_distance(const PolicyParams& policy, const GridLevel& a, const GridLevel& b,
                             const ExperimentConfig& config, std::uint64_t seed) {
  return level_distance(policy_samples(policy, a, config, seed), policy_samples(policy, b, config, seed),
                        distance_config(config, seed));
}

std::string distance_matrix_csv(const PolicyParams& policy, const std::vector<TestLevel>& levels,
                                const ExperimentConfig& config, std::uint64_t seed) {
  std::vector<SampleSet> samples;
  for (const auto& l : levels) samples.push_back(policy_samples(policy, l.level, config, seed));
  const DistanceConfig d = distance_config(config, seed);
  const std::size_t n = levels.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = m[j * n + i] = level_distance(samples[i], samples[j], d);
  std::ostringstream out;
  out << "level";
  for (const auto& l : levels) out << ',' << l.name;
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << levels[i].name;
    for (std::size_t j = 0; j < n; ++j) out << ',' << fmt(m[i * n + j]);
    out << '\n';
  }
  return out.str();
}

std::string compare_runs(const std::vector<std::string>& run_dirs, double lo, double hi) {
  std::vector<RunSummary> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run_summary(d));
  return aggregate_csv(aggregate_runs(runs, lo, hi));
}

}  // namespace ued
