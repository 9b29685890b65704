#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "uedlab/uedlab.h"

namespace {

struct Failure {
  ued_status status;
};

void check(ued_status s) {
  if (s != UED_OK) throw Failure{s};
}

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { ued_string_free(ptr); }
};

struct Config {
  ued_config* ptr = nullptr;
  ~Config() { ued_config_free(ptr); }
};

struct Level {
  ued_level* ptr = nullptr;
  ~Level() { ued_level_free(ptr); }
};

struct Policy {
  ued_policy* ptr = nullptr;
  ~Policy() { ued_policy_free(ptr); }
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    throw Failure{UED_ERR_IO};
  }
  out << text;
}

void load_config(Config& cfg, const std::string& path) {
  if (path.empty())
    check(ued_config_default(&cfg.ptr));
  else
    check(ued_config_load(path.c_str(), &cfg.ptr));
}

// Turns the leftover "--key value" / "--key=value" arguments into config
// overrides.
std::vector<std::pair<std::string, std::string>> split_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw CLI::ExtrasError({arg});
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw CLI::ValidationError(arg, "missing value");
      out.emplace_back(body, extras[++i]);
    }
  }
  return out;
}

struct TrainProgress {
  long total = 0;
  long seen = 0;
  bool quiet = false;
};

void on_record(const char*, void* user) {
  auto* p = static_cast<TrainProgress*>(user);
  ++p->seen;
  if (!p->quiet && (p->seen % 100 == 0 || p->seen == p->total))
    std::fprintf(stderr, "update %ld/%ld\n", p->seen, p->total);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum training and evaluation for gridworld navigation agents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ued_version()));

  auto* train = app.add_subcommand("train", "Train a student under one teacher strategy");
  std::string train_config, train_out;
  std::vector<std::string> sets;
  bool overwrite = false, quiet = false;
  train->add_option("-c,--config", train_config, "INI config file or a run manifest.json");
  train->add_option("-o,--out", train_out, "Output directory (overrides experiment.output_dir)");
  train->add_option("--set", sets, "Override a field: section.key=value")->take_all();
  train->add_flag("--overwrite", overwrite, "Replace an existing run in the output directory");
  train->add_flag("-q,--quiet", quiet, "No progress output");
  train->allow_extras();
  train->footer("Any config field can also be given as --key value, e.g. --strategy diplr --rho 0.5.");

  auto* evaluate = app.add_subcommand("evaluate", "Zero-shot evaluation of a checkpoint on a test suite");
  std::string eval_ckpt, eval_suite = "default", eval_config, eval_out;
  int eval_episodes = 10;
  bool eval_stochastic = false;
  std::uint64_t eval_seed = 0;
  evaluate->add_option("checkpoint", eval_ckpt, "Policy checkpoint")->required();
  evaluate->add_option("--suite", eval_suite, "'default' or a directory of .lvl files");
  evaluate->add_option("-c,--config", eval_config, "Config file for environment settings");
  evaluate->add_option("--episodes", eval_episodes, "Episodes per level");
  evaluate->add_flag("--stochastic", eval_stochastic, "Sample actions instead of taking the argmax");
  evaluate->add_option("--seed", eval_seed, "Seed for stochastic evaluation");
  evaluate->add_option("-o,--out", eval_out, "Write the CSV here instead of stdout");

  auto* compare = app.add_subcommand("compare", "Aggregate IQM and optimality gap over run directories");
  std::vector<std::string> runs;
  double norm_lo = 0.0, norm_hi = 1.0;
  std::string compare_out;
  compare->add_option("runs", runs, "Run directories")->required();
  compare->add_option("--norm-lo", norm_lo, "Lower end of the normalization range");
  compare->add_option("--norm-hi", norm_hi, "Upper end of the normalization range");
  compare->add_option("-o,--out", compare_out, "Write the CSV here instead of stdout");

  auto* distance = app.add_subcommand("distance", "Occupancy distance between levels under a policy");
  std::vector<std::string> level_files;
  std::string policy_path, matrix_dir, dist_config, dist_out;
  std::uint64_t dist_seed = 0;
  distance->add_option("levels", level_files, "Two level files")->expected(0, 2);
  distance->add_option("-p,--policy", policy_path, "Policy checkpoint")->required();
  distance->add_option("--matrix", matrix_dir, "Emit the pairwise CSV for every .lvl file in this directory");
  distance->add_option("-c,--config", dist_config, "Config file for environment and distance settings");
  distance->add_option("--seed", dist_seed, "Seed for rollouts and subsampling");
  distance->add_option("-o,--out", dist_out, "Write the output here instead of stdout");

  auto* gen = app.add_subcommand("gen-levels", "Write randomly generated levels");
  int gen_count = 1, gen_width = 11, gen_height = 11, gen_budget = 15;
  std::uint64_t gen_seed = 0;
  std::string gen_out = ".";
  gen->add_option("-n,--count", gen_count, "Number of levels");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("-o,--out", gen_out, "Output directory");
  gen->add_option("--width", gen_width, "Grid width including the border");
  gen->add_option("--height", gen_height, "Grid height including the border");
  gen->add_option("--block-budget", gen_budget, "Maximum number of interior walls");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      Config cfg;
      load_config(cfg, train_config);
      if (train_config.empty()) {
        // Without a file, the required fields must come from the command line.
        const auto extras = train->remaining();
        for (const char* key : {"strategy", "total_updates", "seed"}) {
          bool given = false;
          for (const auto& [k, v] : split_overrides(extras))
            given |= k == key || k == std::string("experiment.") + key;
          for (const auto& s : sets) given |= s.rfind(std::string("experiment.") + key + "=", 0) == 0;
          if (!given) {
            std::cerr << "error: missing required field 'experiment." << key << "'\n";
            return UED_ERR_CONFIG;
          }
        }
      }
      for (const auto& [k, v] : split_overrides(train->remaining())) check(ued_config_set(cfg.ptr, k.c_str(), v.c_str()));
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
          std::cerr << "error: --set expects section.key=value, got '" << s << "'\n";
          return UED_ERR_CONFIG;
        }
        check(ued_config_set(cfg.ptr, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
      }
      if (!train_out.empty()) check(ued_config_set(cfg.ptr, "experiment.output_dir", train_out.c_str()));
      check(ued_config_validate(cfg.ptr));
      OwnedString total, out_dir;
      check(ued_config_get(cfg.ptr, "experiment.total_updates", &total.ptr));
      check(ued_config_get(cfg.ptr, "experiment.output_dir", &out_dir.ptr));
      TrainProgress progress{std::stol(total.ptr), 0, quiet};
      check(ued_train(cfg.ptr, overwrite ? 1 : 0, on_record, &progress));
      if (!quiet) std::fprintf(stderr, "run written to %s\n", out_dir.ptr);
    } else if (evaluate->parsed()) {
      Config cfg;
      load_config(cfg, eval_config);
      OwnedString csv;
      check(ued_evaluate(eval_ckpt.c_str(), eval_suite.c_str(), cfg.ptr, eval_episodes, eval_stochastic ? 1 : 0,
                         eval_seed, &csv.ptr));
      emit(csv.ptr, eval_out);
    } else if (compare->parsed()) {
      std::vector<const char*> dirs;
      for (const auto& r : runs) dirs.push_back(r.c_str());
      OwnedString csv;
      check(ued_compare(dirs.data(), static_cast<int>(dirs.size()), norm_lo, norm_hi, &csv.ptr));
      emit(csv.ptr, compare_out);
    } else if (distance->parsed()) {
      Config cfg;
      load_config(cfg, dist_config);
      Policy policy;
      check(ued_policy_load(policy_path.c_str(), &policy.ptr));
      if (!matrix_dir.empty()) {
        OwnedString csv;
        check(ued_distance_matrix_csv(matrix_dir.c_str(), policy.ptr, cfg.ptr, dist_seed, &csv.ptr));
        emit(csv.ptr, dist_out);
      } else {
        if (level_files.size() != 2) {
          std::cerr << "error: distance needs two level files or --matrix DIR\n";
          return UED_ERR_INVALID_ARGUMENT;
        }
        Level a, b;
        check(ued_level_load(level_files[0].c_str(), &a.ptr));
        check(ued_level_load(level_files[1].c_str(), &b.ptr));
        double d = 0.0;
        check(ued_level_distance(a.ptr, b.ptr, policy.ptr, cfg.ptr, dist_seed, &d));
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g\n", d);
        emit(buf, dist_out);
      }
    } else if (gen->parsed()) {
      check(ued_gen_levels(gen_width, gen_height, gen_budget, gen_seed, gen_count, gen_out.c_str()));
    }
  } catch (const Failure& f) {
    if (*ued_last_error()) std::cerr << "error: " << ued_last_error() << "\n";
    return static_cast<int>(f.status);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}
