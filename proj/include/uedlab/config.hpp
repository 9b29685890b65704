#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uedlab/curriculum.hpp"

namespace ued {

struct ExperimentConfig {
  TrainingConfig training;
  int eval_every = 100;  // 0: evaluate and checkpoint only at the end
  int eval_episodes = 10;
  bool eval_stochastic = false;
  std::string test_suite = "default";  // "default" or a directory of .lvl files
  double norm_lo = 0.0;
  double norm_hi = 1.0;
  std::string output_dir = "runs/default";

  /// Copies shared values into the sub-configs (grid size into the
  /// generator, gamma into GAE). Called by every loader.
  void resolve();
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// One configurable value, addressed as "section.key".
struct ConfigField {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
  std::string name() const { return section + "." + key; }
};

std::vector<ConfigField> config_fields(ExperimentConfig& config);
/// Fields that must appear in a config file.
const std::vector<std::string>& required_fields();

/// Accepts "section.key" or a bare key when it is unambiguous.
void set_field(ExperimentConfig& config, const std::string& name, const std::string& value);
std::string get_field(const ExperimentConfig& config, const std::string& name);
bool has_field(const std::string& name);

/// INI text with [section] headers. Unknown keys and missing required
/// fields raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
/// Reads an INI file, or the "config" object of a run manifest (.json).
ExperimentConfig load_config(const std::string& path);
std::string to_ini(const ExperimentConfig& config);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& sections);

}  // namespace ued
