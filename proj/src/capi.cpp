#include "uedlab/uedlab.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "uedlab/config.hpp"
#include "uedlab/error.hpp"
#include "uedlab/eval.hpp"
#include "uedlab/experiment.hpp"
#include "uedlab/levelgen.hpp"

struct ued_level {
  ued::GridLevel level;
};
struct ued_policy {
  ued::PolicyParams params;
};
struct ued_config {
  ued::ExperimentConfig config;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
ued_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return UED_OK;
  } catch (const ued::InvalidLevel& e) {
    g_last_error = e.what();
    return UED_ERR_INVALID_LEVEL;
  } catch (const ued::InvalidArgument& e) {
    g_last_error = e.what();
    return UED_ERR_INVALID_ARGUMENT;
  } catch (const ued::ParseError& e) {
    g_last_error = e.what();
    return UED_ERR_PARSE;
  } catch (const ued::SizeCapExceeded& e) {
    g_last_error = e.what();
    return UED_ERR_SIZE_CAP;
  } catch (const ued::ConvergenceError& e) {
    g_last_error = e.what();
    return UED_ERR_CONVERGENCE;
  } catch (const ued::NumericError& e) {
    g_last_error = e.what();
    return UED_ERR_NUMERIC;
  } catch (const ued::IoError& e) {
    g_last_error = e.what();
    return UED_ERR_IO;
  } catch (const ued::ConfigError& e) {
    g_last_error = e.what();
    return UED_ERR_CONFIG;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return UED_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UED_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return UED_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw ued::InvalidArgument(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ued::ExperimentConfig config_or_default(const ued_config* c) { return c ? c->config : ued::ExperimentConfig{}; }

}  // namespace

extern "C" {

const char* ued_version(void) { return ued::version(); }

const char* ued_last_error(void) { return g_last_error.c_str(); }

const char* ued_status_name(ued_status status) {
  switch (status) {
    case UED_OK: return "ok";
    case UED_ERR_INVALID_ARGUMENT: return "invalid argument";
    case UED_ERR_INVALID_LEVEL: return "invalid level";
    case UED_ERR_PARSE: return "parse error";
    case UED_ERR_SIZE_CAP: return "size cap exceeded";
    case UED_ERR_CONVERGENCE: return "convergence error";
    case UED_ERR_NUMERIC: return "numeric error";
    case UED_ERR_IO: return "i/o error";
    case UED_ERR_CONFIG: return "config error";
    case UED_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ued_string_free(char* s) { std::free(s); }

ued_status ued_level_parse(const char* text, ued_level** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new ued_level{ued::parse_level(text)};
  });
}

ued_status ued_level_load(const char* path, ued_level** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ued_level{ued::load_level(path)};
  });
}

ued_status ued_level_save(const ued_level* level, const char* path) {
  return guarded([&] {
    require(level, "level");
    require(path, "path");
    ued::save_level(level->level, path);
  });
}

ued_status ued_level_serialize(const ued_level* level, char** out) {
  return guarded([&] {
    require(level, "level");
    require(out, "out");
    *out = dup_string(ued::serialize_level(level->level));
  });
}

ued_status ued_level_is_solvable(const ued_level* level, int* out) {
  return guarded([&] {
    require(level, "level");
    require(out, "out");
    *out = ued::is_solvable(level->level) ? 1 : 0;
  });
}

void ued_level_free(ued_level* level) { delete level; }

ued_status ued_level_generate(int width, int height, int block_budget, uint64_t seed, ued_level** out) {
  return guarded([&] {
    require(out, "out");
    ued::GeneratorConfig g{block_budget, width, height, seed};
    g.validate();
    ued::Rng rng(ued::derive_seed(seed, "generation"));
    *out = new ued_level{ued::random_level(g, rng)};
  });
}

ued_status ued_gen_levels(int width, int height, int block_budget, uint64_t seed, int count, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    if (count < 0) throw ued::InvalidArgument("count must be >= 0");
    ued::GeneratorConfig g{block_budget, width, height, seed};
    g.validate();
    std::filesystem::create_directories(out_dir);
    ued::Rng rng(ued::derive_seed(seed, "generation"));
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "level_%03d.lvl", i);
      ued::write_file_atomic((std::filesystem::path(out_dir) / name).string(),
                             ued::serialize_level(ued::random_level(g, rng)));
    }
  });
}

ued_status ued_policy_load(const char* path, ued_policy** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ued_policy{ued::load_checkpoint(path)};
  });
}

ued_status ued_policy_save(const ued_policy* policy, const char* path) {
  return guarded([&] {
    require(policy, "policy");
    require(path, "path");
    ued::save_checkpoint(policy->params, path);
  });
}

ued_status ued_policy_input_size(const ued_policy* policy, int* out) {
  return guarded([&] {
    require(policy, "policy");
    require(out, "out");
    *out = policy->params.shape.input;
  });
}

void ued_policy_free(ued_policy* policy) { delete policy; }

ued_status ued_config_default(ued_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new ued_config{};
    (*out)->config.resolve();
  });
}

ued_status ued_config_load(const char* path, ued_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new ued_config{ued::load_config(path)};
  });
}

ued_status ued_config_set(ued_config* config, const char* name, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(name, "name");
    require(value, "value");
    ued::set_field(config->config, name, value);
  });
}

ued_status ued_config_get(const ued_config* config, const char* name, char** out) {
  return guarded([&] {
    require(config, "config");
    require(name, "name");
    require(out, "out");
    *out = dup_string(ued::get_field(config->config, name));
  });
}

ued_status ued_config_has(const char* name, int* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = ued::has_field(name) ? 1 : 0;
  });
}

ued_status ued_config_to_ini(const ued_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = dup_string(ued::to_ini(config->config));
  });
}

ued_status ued_config_validate(const ued_config* config) {
  return guarded([&] {
    require(config, "config");
    config->config.validate();
  });
}

void ued_config_free(ued_config* config) { delete config; }

ued_status ued_train(const ued_config* config, int overwrite, ued_record_callback callback, void* user) {
  return guarded([&] {
    require(config, "config");
    ued::ExperimentOptions opts;
    opts.overwrite = overwrite != 0;
    if (callback)
      opts.on_record = [&](const nlohmann::json& record) { callback(record.dump().c_str(), user); };
    ued::run_experiment(config->config, opts);
  });
}

ued_status ued_evaluate(const char* checkpoint, const char* suite, const ued_config* config, int episodes,
                        int stochastic, uint64_t seed, char** csv_out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(csv_out, "csv_out");
    if (!std::filesystem::exists(checkpoint))
      throw ued::IoError(std::string("checkpoint not found: ") + checkpoint);
    ued::ExperimentConfig cfg = config_or_default(config);
    if (suite) cfg.test_suite = suite;
    const ued::EvalOptions opts{episodes, stochastic != 0, seed};
    const auto record = ued::evaluate_checkpoint(checkpoint, ued::resolve_suite(cfg), cfg.training.env, opts);
    *csv_out = dup_string(ued::run_record_csv(record));
  });
}

ued_status ued_compare(const char* const* run_dirs, int count, double norm_lo, double norm_hi, char** csv_out) {
  return guarded([&] {
    require(csv_out, "csv_out");
    if (count < 1) throw ued::InvalidArgument("compare needs at least one run directory");
    require(run_dirs, "run_dirs");
    std::vector<std::string> dirs;
    for (int i = 0; i < count; ++i) {
      require(run_dirs[i], "run directory");
      dirs.emplace_back(run_dirs[i]);
    }
    *csv_out = dup_string(ued::compare_runs(dirs, norm_lo, norm_hi));
  });
}

ued_status ued_level_distance(const ued_level* a, const ued_level* b, const ued_policy* policy,
                              const ued_config* config, uint64_t seed, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(policy, "policy");
    require(out, "out");
    *out = ued::policy_level_distance(policy->params, a->level, b->level, config_or_default(config), seed);
  });
}

ued_status ued_distance_matrix_csv(const char* level_dir, const ued_policy* policy, const ued_config* config,
                                   uint64_t seed, char** csv_out) {
  return guarded([&] {
    require(level_dir, "level_dir");
    require(policy, "policy");
    require(csv_out, "csv_out");
    const auto levels = ued::load_test_suite(level_dir);
    if (levels.empty()) throw ued::InvalidArgument(std::string("no .lvl files in ") + level_dir);
    *csv_out = dup_string(ued::distance_matrix_csv(policy->params, levels, config_or_default(config), seed));
  });
}

}  // extern "C"
