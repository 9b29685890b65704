#include <doctest.h>

#include <filesystem>
#include <set>

#include "uedlab/config.hpp"
#include "uedlab/error.hpp"
#include "uedlab/experiment.hpp"

using namespace ued;
namespace fs = std::filesystem;

namespace {

const char* kSmallIni = R"(
[experiment]
strategy = plr
total_updates = 12
seed = 5
eval_every = 5
eval_episodes = 2

[teacher]
buffer_size = 4
score_episodes = 2

[env]
max_steps = 40

[ppo]
steps_per_rollout = 32
minibatch_size = 16
epochs = 1

[network]
hidden1 = 8
hidden2 = 8
)";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("uedlab_harness_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("seed streams are reproducible and distinct") {
  auto a = seed_streams(42);
  auto b = seed_streams(42);
  CHECK(a.generation.next_u64() == b.generation.next_u64());
  CHECK(a.rollout.next_u64() == b.rollout.next_u64());
  CHECK(a.teacher.next_u64() == b.teacher.next_u64());

  const std::vector<std::string> names{"generation", "rollout", "subsample", "ppo", "teacher", "init", "eval"};
  Rng master(2024);
  std::set<std::uint64_t> firsts;
  std::size_t drawn = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint64_t seed = master.next_u64();
    for (const auto& n : names) {
      Rng r(derive_seed(seed, n));
      firsts.insert(r.next_u64());
      ++drawn;
    }
  }
  CHECK(firsts.size() == drawn);
}

TEST_CASE("level generation only reads the generation stream") {
  GeneratorConfig g;
  auto a = seed_streams(9);
  auto b = seed_streams(9);
  for (int i = 0; i < 100; ++i) b.rollout.next_u64();
  b.rollout = Rng(12345);
  for (int i = 0; i < 20; ++i) CHECK(random_level(g, a.generation) == random_level(g, b.generation));

}

TEST_CASE("config parsing") {
  const auto c = parse_config(kSmallIni);
  CHECK(c.training.teacher.strategy == Strategy::plr);
  CHECK(c.training.total_updates == 12);
  CHECK(c.training.teacher.buffer_size == 4);
  CHECK(c.training.generator.width == c.training.env.width);
  CHECK(c.training.gae.gamma == c.training.env.gamma);

  SUBCASE("missing required field names it") {
    try {
      parse_config("[experiment]\nstrategy = dr\nseed = 1\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("experiment.total_updates") != std::string::npos);
    }
  }
  SUBCASE("unknown keys and bad values are rejected with the field name") {
    CHECK_THROWS_WITH_AS(parse_config("[experiment]\nstrategy = dr\nseed = 1\ntotal_updates = 3\n[teacher]\nrh0 = 1\n"),
                         doctest::Contains("teacher.rh0"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[experiment]\nstrategy = dr\nseed = 1\ntotal_updates = ten\n"),
                         doctest::Contains("experiment.total_updates"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[experiment]\nstrategy = dr\nseed = 1\ntotal_updates = 3\n[teacher]\nrho = 2\n"),
                         doctest::Contains("teacher"), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nstrategy = paired\nseed = 1\ntotal_updates = 3\n"), ConfigError);
  }
  SUBCASE("overrides take precedence and bare keys resolve") {
    ExperimentConfig o = c;
    set_field(o, "strategy", "diplr");
    set_field(o, "rho", "0.25");
    set_field(o, "env.gamma", "0.9");
    CHECK(o.training.teacher.strategy == Strategy::diplr);
    CHECK(o.training.teacher.rho == 0.25);
    CHECK(o.training.gae.gamma == 0.9);
    CHECK(get_field(o, "teacher.rho") == "0.25");
    CHECK_THROWS_AS(set_field(o, "nonsense", "1"), ConfigError);
  }
  SUBCASE("field keys are unique so --key works for all of them") {
    ExperimentConfig scratch_cfg;
    std::set<std::string> keys;
    for (const auto& f : config_fields(scratch_cfg)) {
      CHECK(keys.insert(f.key).second);
      CHECK(has_field(f.key));
    }
  }
  SUBCASE("ini and json round trips are exact") {
    ExperimentConfig o = c;
    set_field(o, "rho", "0.1");
    set_field(o, "learning_rate", "0.00031");
    CHECK(to_ini(parse_config(to_ini(o))) == to_ini(o));
    CHECK(to_ini(config_from_json(to_json(o))) == to_ini(o));
  }
}

TEST_CASE("run_experiment writes a reproducible run directory") {
  const auto dir = scratch("run");
  ExperimentConfig c = parse_config(kSmallIni);
  set_field(c, "output_dir", (dir / "a").string());
  set_field(c, "rho", "0.7");
  const auto r = run_experiment(c);
  CHECK(r.updates == 12);
  CHECK(r.checkpoints.size() == 3);  // 5, 10 and the final update
  const RunLayout a{(dir / "a").string()};
  for (const auto& p : {a.manifest(), a.log(), a.eval(), a.buffer_stats(), a.checkpoints() + "/latest.ckpt",
                        a.checkpoints() + "/update_000012.ckpt", a.buffers() + "/update_000010/scores.csv"})
    CHECK_MESSAGE(fs::exists(p), p);

  const auto manifest = nlohmann::json::parse(read_file(a.manifest()));
  CHECK(manifest["status"] == "completed");
  CHECK(manifest["config"]["teacher"]["rho"] == "0.7");
  CHECK(manifest["config"]["experiment"]["strategy"] == "plr");
  CHECK(manifest["checkpoints"].size() == 3);
  CHECK_FALSE(manifest["finished_at"].is_null());

  const std::string log = read_file(a.log());
  CHECK(std::count(log.begin(), log.end(), '\n') == 12);

  // The manifest alone reproduces the run.
  ExperimentConfig again = load_config(a.manifest());
  set_field(again, "output_dir", (dir / "b").string());
  run_experiment(again);
  const RunLayout b{(dir / "b").string()};
  CHECK(read_file(b.log()) == log);
  CHECK(read_file(b.eval()) == read_file(a.eval()));
  CHECK(read_file(b.checkpoints() + "/latest.ckpt") == read_file(a.checkpoints() + "/latest.ckpt"));

  CHECK_THROWS_AS(run_experiment(again), IoError);
  CHECK_NOTHROW(run_experiment(again, {true, {}}));
  CHECK(read_file(b.log()) == log);

  const auto summary = load_run_summary(a.root);
  CHECK(summary.algorithm == "plr");
  CHECK(summary.seed == 5);
  CHECK(summary.level_names.size() == 8);
  const std::string csv = compare_runs({a.root, b.root});
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 + 1);
  fs::remove_all(dir);
}

TEST_CASE("a failing run keeps its last checkpoint and records the error") {
  const auto dir = scratch("fail");
  ExperimentConfig c = parse_config(kSmallIni);
  set_field(c, "output_dir", dir.string());
  ExperimentOptions opts;
  opts.on_record = [](const nlohmann::json& r) {
    if (r["update"] == 7) throw NumericError("injected failure");
  };
  CHECK_THROWS_AS(run_experiment(c, opts), NumericError);
  const RunLayout layout{dir.string()};
  const auto manifest = nlohmann::json::parse(read_file(layout.manifest()));
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["error"].get<std::string>().find("injected") != std::string::npos);
  CHECK(manifest["checkpoints"].size() == 1);
  CHECK(fs::exists(layout.checkpoints() + "/update_000005.ckpt"));
  CHECK_NOTHROW(load_checkpoint(layout.checkpoints() + "/latest.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("policy distances are symmetric and match the matrix") {
  ExperimentConfig c;
  Rng rng(3);
  const auto policy = init_policy({static_cast<int>(c.training.env.feature_size()), 8, 8}, rng);
  const auto& suite = default_test_suite();
  std::vector<TestLevel> four(suite.begin(), suite.begin() + 4);
  const double d01 = policy_level_distance(policy, four[0].level, four[1].level, c, 11);
  CHECK(d01 == policy_level_distance(policy, four[1].level, four[0].level, c, 11));
  CHECK(d01 >= 0.0);
  CHECK(policy_level_distance(policy, four[2].level, four[2].level, c, 11) == 0.0);
  const std::string csv = distance_matrix_csv(policy, four, c, 11);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  std::ostringstream want;
  want.precision(17);
  want << d01;
  CHECK(csv.find(want.str()) != std::string::npos);
}
