#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out;
};

// Runs the CLI through the shell with stderr folded into the captured output.
Result run(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" UEDLAB_CLI "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path workdir() {
  static const fs::path dir = [] {
    const auto p = fs::temp_directory_path() / "uedlab_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    std::ofstream(p / "small.ini") << "[experiment]\nstrategy = dr\ntotal_updates = 6\nseed = 3\neval_every = 3\n"
                                      "eval_episodes = 1\n\n[teacher]\nrho = 0.3\nbuffer_size = 3\n\n"
                                      "[ppo]\nsteps_per_rollout = 16\nminibatch_size = 16\nepochs = 1\n\n"
                                      "[network]\nhidden1 = 4\nhidden2 = 4\n";
    std::ofstream(p / "incomplete.ini") << "[experiment]\nstrategy = dr\nseed = 3\n";
    return p;
  }();
  return dir;
}

}  // namespace

TEST_CASE("gen-levels is deterministic") {
  const auto w = workdir();
  REQUIRE(run("gen-levels --count 5 --seed 7 --out g1", w).status == 0);
  REQUIRE(run("gen-levels --count 5 --seed 7 --out g2", w).status == 0);
  REQUIRE(run("gen-levels --count 5 --seed 8 --out g3", w).status == 0);
  int same_as_other_seed = 0;
  for (int i = 0; i < 5; ++i) {
    const std::string name = "level_00" + std::to_string(i) + ".lvl";
    CHECK(slurp(w / "g1" / name) == slurp(w / "g2" / name));
    CHECK_FALSE(slurp(w / "g1" / name).empty());
    same_as_other_seed += slurp(w / "g1" / name) == slurp(w / "g3" / name);
  }
  CHECK(same_as_other_seed < 5);
}

TEST_CASE("train, evaluate, distance and compare") {
  const auto w = workdir();
  auto r = run("train -q -c small.ini --strategy diplr --rho 0.5 --out runA", w);
  REQUIRE_MESSAGE(r.status == 0, r.out);
  const auto manifest = nlohmann::json::parse(slurp(w / "runA" / "manifest.json"));
  CHECK(manifest["config"]["experiment"]["strategy"] == "diplr");
  CHECK(manifest["config"]["teacher"]["rho"] == "0.5");
  CHECK(manifest["config"]["experiment"]["output_dir"] == "runA");

  r = run("train -q -c small.ini --set teacher.rho=0.4 --out runB", w);
  REQUIRE_MESSAGE(r.status == 0, r.out);
  CHECK(nlohmann::json::parse(slurp(w / "runB" / "manifest.json"))["config"]["teacher"]["rho"] == "0.4");

  r = run("train -q -c small.ini --out runA", w);
  CHECK(r.status != 0);
  CHECK(r.out.find("runA") != std::string::npos);

  r = run("train -q -c incomplete.ini --out runC", w);
  CHECK(r.status != 0);
  CHECK(r.out.find("experiment.total_updates") != std::string::npos);
  r = run("train -q --strategy dr --seed 1 --out runC", w);
  CHECK(r.status != 0);
  CHECK(r.out.find("experiment.total_updates") != std::string::npos);
  r = run("train -q -c small.ini --bogus 1 --out runC", w);
  CHECK(r.status != 0);
  CHECK(r.out.find("bogus") != std::string::npos);

  r = run("evaluate runA/checkpoints/latest.ckpt --episodes 2", w);
  REQUIRE_MESSAGE(r.status == 0, r.out);
  CHECK(r.out.rfind("level,seed,solved_rate,mean_return\n", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 9);
  CHECK(run("evaluate runA/checkpoints/latest.ckpt --episodes 2", w).out == r.out);

  r = run("evaluate nope.ckpt", w);
  CHECK(r.status != 0);
  CHECK(r.out.find("nope.ckpt") != std::string::npos);

  REQUIRE(run("gen-levels --count 3 --seed 1 --out lv", w).status == 0);
  r = run("distance lv/level_000.lvl lv/level_001.lvl --policy runA/checkpoints/latest.ckpt", w);
  REQUIRE_MESSAGE(r.status == 0, r.out);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  CHECK(std::stod(r.out) >= 0.0);
  r = run("distance lv/level_000.lvl lv/missing.lvl --policy runA/checkpoints/latest.ckpt", w);
  CHECK(r.status != 0);
  CHECK(r.out.find("lv/missing.lvl") != std::string::npos);
  r = run("distance --matrix lv --policy runA/checkpoints/latest.ckpt", w);
  REQUIRE_MESSAGE(r.status == 0, r.out);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);

  r = run("compare runA runB", w);
  REQUIRE_MESSAGE(r.status == 0, r.out);
  std::istringstream rows(r.out);
  int run_rows = 0, algo_rows = 0;
  for (std::string line; std::getline(rows, line);) {
    run_rows += line.rfind("run,", 0) == 0;
    algo_rows += line.rfind("algorithm,", 0) == 0;
  }
  CHECK(run_rows == 2);
  CHECK(algo_rows == 2);
  CHECK(run("compare runA does-not-exist", w).status != 0);
}

TEST_CASE("training twice gives identical logs") {
  const auto w = workdir();
  REQUIRE(run("train -q -c small.ini --strategy plr --out det1", w).status == 0);
  REQUIRE(run("train -q -c det1/manifest.json --out det2", w).status == 0);
  CHECK(slurp(w / "det1" / "log.jsonl") == slurp(w / "det2" / "log.jsonl"));
  CHECK_FALSE(slurp(w / "det1" / "log.jsonl").empty());
}
