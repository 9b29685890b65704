#include "uedlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "uedlab/error.hpp"
#include "uedlab/levelgen.hpp"
#include "uedlab/rng.hpp"

namespace ued {

namespace {

const char* const kSuiteText[][2] = {
    {"four-rooms",
     "dir: east\n"
     "###########\n"
     "#....#....#\n"
     "#.S..#....#\n"
     "#.........#\n"
     "#....#....#\n"
     "##.###.####\n"
     "#....#....#\n"
     "#....#....#\n"
     "#.........#\n"
     "#....#...G#\n"
     "###########\n"},
    {"labyrinth",
     "dir: south\n"
     "###########\n"
     "#S#.......#\n"
     "#.#.#####.#\n"
     "#.#.#...#.#\n"
     "#.#.#.#.#.#\n"
     "#.#.#G#.#.#\n"
     "#.#.###.#.#\n"
     "#.#.....#.#\n"
     "#.#######.#\n"
     "#.........#\n"
     "###########\n"},
    {"spiral",
     "dir: north\n"
     "###########\n"
     "#.........#\n"
     "#.#######.#\n"
     "#.#.....#.#\n"
     "#.#.###.#.#\n"
     "#.#.#G#.#.#\n"
     "#.#.#.#.#.#\n"
     "#.#...#.#.#\n"
     "#.#####.#.#\n"
     "#S......#.#\n"
     "###########\n"},
    {"long-corridor",
     "dir: east\n"
     "###########\n"
     "#S........#\n"
     "#########.#\n"
     "#.........#\n"
     "#.#########\n"
     "#.........#\n"
     "#########.#\n"
     "#.........#\n"
     "#.#########\n"
     "#........G#\n"
     "###########\n"},
    {"sixteen-rooms-scaled",
     "dir: south\n"
     "###########\n"
     "#S.#..#...#\n"
     "#.....#...#\n"
     "#..#..#...#\n"
     "##.####.###\n"
     "#..#......#\n"
     "#..#..#...#\n"
     "#.....#...#\n"
     "####.##.###\n"
     "#..#..#..G#\n"
     "###########\n"},
    {"dead-end-maze",
     "dir: east\n"
     "###########\n"
     "#S..#.....#\n"
     "###.#.###.#\n"
     "#...#.#...#\n"
     "#.###.#.###\n"
     "#.....#...#\n"
     "#.#####.#.#\n"
     "#.#.....#.#\n"
     "#.#.#####.#\n"
     "#...#....G#\n"
     "###########\n"},
    {"perfect-maze",
     "dir: north\n"
     "###########\n"
     "#.#.......#\n"
     "#.#.###.#.#\n"
     "#...#...#.#\n"
     "###.#.###.#\n"
     "#...#.#...#\n"
     "#.###.#.###\n"
     "#.#...#...#\n"
     "#.#.#####.#\n"
     "#S#......G#\n"
     "###########\n"},
    {"open-field",
     "dir: west\n"
     "###########\n"
     "#.........#\n"
     "#.........#\n"
     "#..S......#\n"
     "#.........#\n"
     "#.........#\n"
     "#.........#\n"
     "#......G..#\n"
     "#.........#\n"
     "#.........#\n"
     "###########\n"},
};

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + " needs finite scores");
}

}  // namespace

const std::vector<TestLevel>& default_test_suite() {
  static const std::vector<TestLevel> suite = [] {
    std::vector<TestLevel> out;
    for (const auto& [name, text] : kSuiteText) out.push_back({name, parse_level(text)});
    return out;
  }();
  return suite;
}

std::vector<TestLevel> load_test_suite(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<TestLevel> out;
  for (const auto& f : fs::directory_iterator(dir))
    if (f.is_regular_file() && f.path().extension() == ".lvl")
      out.push_back({f.path().stem().string(), load_level(f.path().string())});
  std::sort(out.begin(), out.end(), [](const TestLevel& a, const TestLevel& b) { return a.name < b.name; });
  return out;
}

void validate_suite(const std::vector<TestLevel>& suite, const EnvConfig& env) {
  if (suite.empty()) throw InvalidArgument("test suite is empty");
  std::set<std::string> names;
  for (const auto& t : suite) {
    if (!names.insert(t.name).second) throw InvalidArgument("duplicate test level name '" + t.name + "'");
    validate_level(t.level);
    if (t.level.width != env.width || t.level.height != env.height)
      throw InvalidArgument("test level '" + t.name + "' is " + std::to_string(t.level.width) + "x" +
                            std::to_string(t.level.height) + ", environment is " + std::to_string(env.width) +
                            "x" + std::to_string(env.height));
    if (!is_solvable(t.level)) throw InvalidLevel("test level '" + t.name + "' is not solvable");
  }
}

LevelStats run_episodes(const ActionFn& actor, const GridLevel& level, const EnvConfig& env, int episodes) {
  if (episodes < 1) throw InvalidArgument("episodes must be >= 1");
  int solved = 0;
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    ResetResult r = reset(level, env);
    EnvState state = r.state;
    Observation obs = r.observation;
    double ret = 0.0;
    bool done = false;
    while (!done) {
      StepResult s = step(state, actor(state, obs), level, env);
      ret += s.reward;
      done = s.done;
      if (s.reward > 0.0) ++solved;
      state = std::move(s.state);
      obs = std::move(s.observation);
    }
    total += ret;
  }
  return {static_cast<double>(solved) / episodes, total / episodes};
}

LevelStats evaluate_level(const PolicyParams& policy, const GridLevel& level, const EnvConfig& env,
                          const EvalOptions& options) {
  if (policy.shape.input != static_cast<int>(env.feature_size()))
    throw InvalidArgument("policy expects " + std::to_string(policy.shape.input) + " input features, environment "
                          "produces " + std::to_string(env.feature_size()));
  std::vector<double> features(env.feature_size());
  Rng rng(options.seed);
  auto actor = [&](const EnvState&, const Observation& obs) {
    encode_observation(obs, features);
    return options.stochastic ? act(policy, features, rng).action : act_greedy(policy, features).action;
  };
  return run_episodes(actor, level, env, options.episodes);
}

double solved_rate(const PolicyParams& policy, const GridLevel& level, const EnvConfig& env,
                   const EvalOptions& options) {
  return evaluate_level(policy, level, env, options).solved_rate;
}

std::vector<double> RunRecord::solved_rates() const {
  std::vector<double> out;
  for (const auto& l : levels) out.push_back(l.solved_rate);
  return out;
}

RunRecord evaluate_policy(const PolicyParams& policy, const std::vector<TestLevel>& suite, const EnvConfig& env,
                          const EvalOptions& options) {
  validate_suite(suite, env);
  RunRecord rec;
  rec.seed = options.seed;
  for (const auto& t : suite) {
    EvalOptions per = options;
    per.seed = derive_seed(options.seed, t.name);
    const LevelStats s = evaluate_level(policy, t.level, env, per);
    rec.levels.push_back({t.name, s.solved_rate, s.mean_return});
  }
  return rec;
}

RunRecord evaluate_checkpoint(const std::string& checkpoint, const std::vector<TestLevel>& suite,
                              const EnvConfig& env, const EvalOptions& options) {
  return evaluate_policy(load_checkpoint(checkpoint), suite, env, options);
}

std::string run_record_csv(const RunRecord& record) {
  std::ostringstream out;
  out.precision(17);
  out << "level,seed,solved_rate,mean_return\n";
  for (const auto& l : record.levels)
    out << l.name << ',' << record.seed << ',' << l.solved_rate << ',' << l.mean_return << '\n';
  return out.str();
}

RunRecord parse_run_record_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  RunRecord rec;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 4) throw ParseError("expected 4 columns", lineno, 1);
    try {
      rec.seed = std::stoull(cols[1]);
      rec.levels.push_back({cols[0], std::stod(cols[2]), std::stod(cols[3])});
    } catch (const std::logic_error&) {
      throw ParseError("malformed number", lineno, 1);
    }
  }
  return rec;
}

std::vector<double> min_max_normalize(std::span<const double> scores, double lo, double hi) {
  if (!(hi > lo)) throw InvalidArgument("normalization range needs hi > lo");
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(std::clamp((s - lo) / (hi - lo), 0.0, 1.0));
  return out;
}

double iqm(std::span<const double> scores) {
  if (scores.size() < 4) throw InvalidArgument("IQM needs at least 4 scores");
  require_finite(scores, "IQM");
  const auto s = sorted_copy(scores);
  const std::size_t cut = s.size() / 4;
  const double total = std::accumulate(s.begin() + static_cast<std::ptrdiff_t>(cut),
                                       s.end() - static_cast<std::ptrdiff_t>(cut), 0.0);
  return total / static_cast<double>(s.size() - 2 * cut);
}

double optimality_gap(std::span<const double> scores, double target) {
  if (scores.empty()) return 0.0;
  double total = 0.0;
  for (double s : scores) total += std::max(0.0, target - s);
  return total / static_cast<double>(scores.size());
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty list");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  const auto s = sorted_copy(values);
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= s.size()) return s.back();
  return s[i] + (pos - static_cast<double>(i)) * (s[i + 1] - s[i]);
}

AggregateReport aggregate_runs(const std::vector<RunSummary>& runs, double lo, double hi) {
  if (runs.empty()) throw InvalidArgument("nothing to aggregate");
  AggregateReport rep;
  rep.lo = lo;
  rep.hi = hi;
  rep.level_names = runs.front().level_names;
  std::map<std::string, std::vector<std::vector<double>>> by_algo;
  std::vector<std::string> algo_order;
  for (const auto& r : runs) {
    if (r.level_names != rep.level_names)
      throw InvalidArgument("run '" + r.run + "' was evaluated on a different set of levels");
    if (r.solved_rates.size() != r.level_names.size())
      throw InvalidArgument("run '" + r.run + "' has mismatched level and score counts");
    const auto norm = min_max_normalize(r.solved_rates, lo, hi);
    RunScore s{r.run, r.algorithm, r.seed, 0.0, optimality_gap(norm), 0.0};
    s.mean = std::accumulate(norm.begin(), norm.end(), 0.0) / static_cast<double>(norm.size());
    s.iqm = norm.size() >= 4 ? iqm(norm) : s.mean;
    rep.runs.push_back(s);
    if (!by_algo.count(r.algorithm)) algo_order.push_back(r.algorithm);
    by_algo[r.algorithm].push_back(norm);
  }
  for (const auto& name : algo_order) {
    const auto& rows = by_algo[name];
    AlgorithmAggregate a;
    a.algorithm = name;
    a.runs = rows.size();
    std::vector<double> pooled;
    for (const auto& row : rows) pooled.insert(pooled.end(), row.begin(), row.end());
    a.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / static_cast<double>(pooled.size());
    a.iqm = pooled.size() >= 4 ? iqm(pooled) : a.mean;
    a.optimality_gap = optimality_gap(pooled);
    for (std::size_t l = 0; l < rep.level_names.size(); ++l) {
      std::vector<double> col;
      for (const auto& row : rows) col.push_back(row[l]);
      a.level_median.push_back(quantile(col, 0.5));
      a.level_iqr.push_back(quantile(col, 0.75) - quantile(col, 0.25));
    }
    rep.algorithms.push_back(std::move(a));
  }
  return rep;
}

std::string aggregate_csv(const AggregateReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "kind,name,algorithm,seed,runs,iqm,optimality_gap,mean,norm_lo,norm_hi";
  for (const auto& n : report.level_names) out << ",median:" << n << ",iqr:" << n;
  out << '\n';
  for (const auto& r : report.runs) {
    out << "run," << r.run << ',' << r.algorithm << ',' << r.seed << ",1," << r.iqm << ',' << r.optimality_gap << ','
        << r.mean << ',' << report.lo << ',' << report.hi;
    for (std::size_t i = 0; i < report.level_names.size(); ++i) out << ",,";
    out << '\n';
  }
  for (const auto& a : report.algorithms) {
    out << "algorithm," << a.algorithm << ',' << a.algorithm << ",," << a.runs << ',' << a.iqm << ','
        << a.optimality_gap << ',' << a.mean << ',' << report.lo << ',' << report.hi;
    for (std::size_t i = 0; i < a.level_median.size(); ++i) out << ',' << a.level_median[i] << ',' << a.level_iqr[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace ued
