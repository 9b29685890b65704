#include "uedlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "uedlab/error.hpp"

namespace ued {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
T parse_number(const std::string& field, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty())
    throw ConfigError(field + ": cannot parse '" + text + "' as a number");
  return v;
}

bool parse_bool(const std::string& field, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(field + ": expected true or false, got '" + text + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

ConfigField int_field(std::string section, std::string key, int& ref) {
  const std::string name = section + "." + key;
  return {section, key, [&ref] { return std::to_string(ref); },
          [&ref, name](const std::string& v) { ref = parse_number<int>(name, v); }};
}

ConfigField u64_field(std::string section, std::string key, std::uint64_t& ref) {
  const std::string name = section + "." + key;
  return {section, key, [&ref] { return std::to_string(ref); },
          [&ref, name](const std::string& v) { ref = parse_number<std::uint64_t>(name, v); }};
}

ConfigField size_field(std::string section, std::string key, std::size_t& ref) {
  const std::string name = section + "." + key;
  return {section, key, [&ref] { return std::to_string(ref); },
          [&ref, name](const std::string& v) { ref = parse_number<std::size_t>(name, v); }};
}

ConfigField double_field(std::string section, std::string key, double& ref) {
  const std::string name = section + "." + key;
  return {section, key, [&ref] { return format_double(ref); },
          [&ref, name](const std::string& v) { ref = parse_number<double>(name, v); }};
}

ConfigField bool_field(std::string section, std::string key, bool& ref) {
  const std::string name = section + "." + key;
  return {section, key, [&ref] { return ref ? std::string("true") : std::string("false"); },
          [&ref, name](const std::string& v) { ref = parse_bool(name, v); }};
}

ConfigField string_field(std::string section, std::string key, std::string& ref) {
  return {section, key, [&ref] { return ref; }, [&ref](const std::string& v) { ref = v; }};
}

ConfigField* find_field(std::vector<ConfigField>& fields, const std::string& name) {
  for (auto& f : fields)
    if (f.name() == name) return &f;
  ConfigField* match = nullptr;
  for (auto& f : fields) {
    if (f.key != name) continue;
    if (match) throw ConfigError("ambiguous option '" + name + "'");
    match = &f;
  }
  return match;
}

}  // namespace

void ExperimentConfig::resolve() {
  training.generator.width = training.env.width;
  training.generator.height = training.env.height;
  training.gae.gamma = training.env.gamma;
}

void ExperimentConfig::validate() const {
  auto check = [](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string(field) + ": " + e.what());
    }
  };
  check("teacher", [&] { training.teacher.validate(); });
  check("env", [&] { training.env.validate(); });
  check("generator", [&] { training.generator.validate(); });
  check("ppo", [&] { training.ppo.validate(); });
  check("gae", [&] { training.gae.validate(); });
  check("experiment", [&] { training.validate(); });
  if (eval_every < 0) throw ConfigError("experiment.eval_every: must be >= 0");
  if (eval_episodes < 1) throw ConfigError("experiment.eval_episodes: must be >= 1");
  if (!(norm_hi > norm_lo)) throw ConfigError("experiment.norm_hi: must exceed experiment.norm_lo");
  if (output_dir.empty()) throw ConfigError("experiment.output_dir: must not be empty");
}

std::vector<ConfigField> config_fields(ExperimentConfig& c) {
  TrainingConfig& t = c.training;
  std::vector<ConfigField> f;
  f.push_back({"experiment", "strategy", [&t] { return std::string(strategy_name(t.teacher.strategy)); },
               [&t](const std::string& v) {
                 try {
                   t.teacher.strategy = parse_strategy(v);
                 } catch (const InvalidArgument& e) {
                   throw ConfigError(std::string("experiment.strategy: ") + e.what());
                 }
               }});
  f.push_back(int_field("experiment", "total_updates", t.total_updates));
  f.push_back(u64_field("experiment", "seed", t.seed));
  f.push_back(int_field("experiment", "eval_every", c.eval_every));
  f.push_back(int_field("experiment", "eval_episodes", c.eval_episodes));
  f.push_back(bool_field("experiment", "eval_stochastic", c.eval_stochastic));
  f.push_back(string_field("experiment", "test_suite", c.test_suite));
  f.push_back(double_field("experiment", "norm_lo", c.norm_lo));
  f.push_back(double_field("experiment", "norm_hi", c.norm_hi));
  f.push_back(string_field("experiment", "output_dir", c.output_dir));

  f.push_back(double_field("teacher", "rho", t.teacher.rho));
  f.push_back(double_field("teacher", "beta", t.teacher.beta));
  f.push_back(double_field("teacher", "staleness_coef", t.teacher.staleness_coef));
  f.push_back(double_field("teacher", "replay_threshold", t.teacher.replay_threshold));
  f.push_back(int_field("teacher", "buffer_size", t.teacher.buffer_size));
  f.push_back(int_field("teacher", "minimax_search_budget", t.teacher.minimax_search_budget));
  f.push_back(int_field("teacher", "score_episodes", t.teacher.score_episodes));
  f.push_back(int_field("teacher", "refresh_every", t.teacher.refresh_every));

  f.push_back(int_field("env", "width", t.env.width));
  f.push_back(int_field("env", "height", t.env.height));
  f.push_back(int_field("env", "max_steps", t.env.max_steps));
  f.push_back(int_field("env", "view_size", t.env.view_size));
  f.push_back(double_field("env", "gamma", t.env.gamma));

  f.push_back(int_field("generator", "block_budget", t.generator.block_budget));

  f.push_back(double_field("ppo", "clip_ratio", t.ppo.clip_ratio));
  f.push_back(int_field("ppo", "epochs", t.ppo.epochs));
  f.push_back(int_field("ppo", "minibatch_size", t.ppo.minibatch_size));
  f.push_back(double_field("ppo", "learning_rate", t.ppo.learning_rate));
  f.push_back(double_field("ppo", "value_coef", t.ppo.value_coef));
  f.push_back(double_field("ppo", "entropy_coef", t.ppo.entropy_coef));
  f.push_back(double_field("ppo", "max_grad_norm", t.ppo.max_grad_norm));
  f.push_back(int_field("ppo", "steps_per_rollout", t.ppo.steps_per_rollout));
  f.push_back(bool_field("ppo", "normalize_advantages", t.ppo.normalize_advantages));

  f.push_back(double_field("gae", "lambda", t.gae.lambda));

  f.push_back(size_field("distance", "max_samples", t.distance.max_samples));
  f.push_back(double_field("distance", "exponent", t.distance.exponent));
  f.push_back(size_field("distance", "max_cells", t.distance.emd.max_cells));
  f.push_back(bool_field("distance", "sinkhorn_fallback", t.distance.sinkhorn_fallback));
  f.push_back(double_field("distance", "sinkhorn_epsilon", t.distance.sinkhorn.epsilon));
  f.push_back(double_field("distance", "sinkhorn_tolerance", t.distance.sinkhorn.tolerance));
  f.push_back(int_field("distance", "sinkhorn_max_iterations", t.distance.sinkhorn.max_iterations));

  f.push_back(int_field("network", "hidden1", t.network.hidden1));
  f.push_back(int_field("network", "hidden2", t.network.hidden2));
  return f;
}

const std::vector<std::string>& required_fields() {
  static const std::vector<std::string> names{"experiment.strategy", "experiment.total_updates", "experiment.seed"};
  return names;
}

void set_field(ExperimentConfig& config, const std::string& name, const std::string& value) {
  auto fields = config_fields(config);
  ConfigField* f = find_field(fields, name);
  if (!f) throw ConfigError("unknown option '" + name + "'");
  f->set(trim(value));
  config.resolve();
}

std::string get_field(const ExperimentConfig& config, const std::string& name) {
  auto fields = config_fields(const_cast<ExperimentConfig&>(config));
  ConfigField* f = find_field(fields, name);
  if (!f) throw ConfigError("unknown option '" + name + "'");
  return f->get();
}

bool has_field(const std::string& name) {
  ExperimentConfig scratch;
  auto fields = config_fields(scratch);
  try {
    return find_field(fields, name) != nullptr;
  } catch (const ConfigError&) {
    return false;
  }
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig config;
  auto fields = config_fields(config);
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("'" + section + "' must be inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      auto it = std::find_if(fields.begin(), fields.end(), [&](const ConfigField& f) { return f.name() == name; });
      if (it == fields.end()) throw ConfigError("unknown config field '" + name + "'");
      it->set(trim(value.data()));
      seen.insert(name);
    }
  }
  for (const auto& r : required_fields())
    if (!seen.count(r)) throw ConfigError("missing required field '" + r + "'");
  config.resolve();
  config.validate();
  return config;
}

ExperimentConfig config_from_json(const nlohmann::json& sections) {
  std::ostringstream ini;
  for (const auto& [section, body] : sections.items()) {
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    ini << '[' << section << "]\n";
    for (const auto& [key, value] : body.items())
      ini << key << " = " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  return parse_config(ini.str());
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
      const auto doc = nlohmann::json::parse(text);
      if (!doc.contains("config")) throw ConfigError("manifest has no 'config' object");
      return config_from_json(doc.at("config"));
    }
    return parse_config(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string to_ini(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  std::ostringstream out;
  std::string section;
  for (const auto& f : config_fields(copy)) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get() << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const ExperimentConfig& config) {
  ExperimentConfig copy = config;
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : config_fields(copy)) j[f.section][f.key] = f.get();
  return j;
}

}  // namespace ued
