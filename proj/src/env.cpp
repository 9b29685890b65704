#include "uedlab/env.hpp"

#include <algorithm>
#include <deque>

#include "uedlab/error.hpp"

namespace ued {

const char* heading_name(Heading h) {
  switch (h) {
    case Heading::north: return "north";
    case Heading::east: return "east";
    case Heading::south: return "south";
    case Heading::west: return "west";
  }
  return "?";
}

Heading parse_heading(const std::string& name) {
  if (name == "north") return Heading::north;
  if (name == "east") return Heading::east;
  if (name == "south") return Heading::south;
  if (name == "west") return Heading::west;
  throw InvalidArgument("unknown heading '" + name + "'");
}

Cell heading_vector(Heading h) {
  switch (h) {
    case Heading::north: return {0, -1};
    case Heading::east: return {1, 0};
    case Heading::south: return {0, 1};
    case Heading::west: return {-1, 0};
  }
  return {0, 0};
}

GridLevel GridLevel::empty(int width, int height, Cell start, Heading dir, Cell goal) {
  GridLevel level;
  level.width = width;
  level.height = height;
  level.walls.assign(static_cast<std::size_t>(std::max(width, 0) * std::max(height, 0)), 0);
  level.start = start;
  level.start_dir = dir;
  level.goal = goal;
  return level;
}

bool GridLevel::is_wall(Cell c) const {
  if (!in_bounds(c) || is_border(c)) return true;
  return walls[static_cast<std::size_t>(c.y * width + c.x)] != 0;
}

void GridLevel::set_wall(Cell c, bool on) {
  if (!is_interior(c)) throw InvalidArgument("wall cell outside the interior");
  walls[static_cast<std::size_t>(c.y * width + c.x)] = on ? 1 : 0;
}

int GridLevel::wall_count() const {
  return static_cast<int>(std::count(walls.begin(), walls.end(), std::uint8_t{1}));
}

void validate_level(const GridLevel& level) {
  if (level.width < 3 || level.height < 3)
    throw InvalidLevel("grid must be at least 3x3 including the border");
  if (level.walls.size() != static_cast<std::size_t>(level.width * level.height))
    throw InvalidLevel("wall map size does not match grid dimensions");
  for (int y = 0; y < level.height; ++y)
    for (int x = 0; x < level.width; ++x)
      if (level.is_border({x, y}) && level.walls[static_cast<std::size_t>(y * level.width + x)])
        throw InvalidLevel("border cells must not be stored in the wall map");
  auto where = [](Cell c) {
    return "(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
  };
  if (!level.is_interior(level.start)) throw InvalidLevel("start " + where(level.start) + " is not an interior cell");
  if (!level.is_interior(level.goal)) throw InvalidLevel("goal " + where(level.goal) + " is not an interior cell");
  if (level.is_wall(level.start)) throw InvalidLevel("start " + where(level.start) + " is on a wall");
  if (level.is_wall(level.goal)) throw InvalidLevel("goal " + where(level.goal) + " is on a wall");
  if (level.start == level.goal) throw InvalidLevel("start and goal coincide at " + where(level.start));
  if (static_cast<int>(level.start_dir) >= kNumHeadings)
    throw InvalidLevel("bad start heading");
}

void EnvConfig::validate() const {
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (view_size < 3 || view_size % 2 == 0) throw InvalidArgument("view_size must be odd and >= 3");
  if (width < 3 || height < 3) throw InvalidArgument("grid must be at least 3x3");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
}

std::size_t EnvConfig::feature_size() const { return ued::feature_size(view_size); }

std::size_t feature_size(int view_size) {
  return static_cast<std::size_t>(view_size * view_size * kNumCellKinds + kNumHeadings);
}

double success_reward(int steps_taken, int max_steps) {
  return 1.0 - 0.9 * (static_cast<double>(steps_taken) / static_cast<double>(max_steps));
}

Observation observe(const EnvState& state, const GridLevel& level, const EnvConfig& config) {
  const int v = config.view_size;
  Observation obs;
  obs.view_size = v;
  obs.dir = state.agent_dir;
  obs.view.resize(static_cast<std::size_t>(v * v));
  const Cell fwd = heading_vector(state.agent_dir);
  const Cell right{-fwd.y, fwd.x};
  for (int row = 0; row < v; ++row) {
    const int ahead = v - 1 - row;
    for (int col = 0; col < v; ++col) {
      const int lateral = col - v / 2;
      const Cell c{state.agent_pos.x + ahead * fwd.x + lateral * right.x,
                   state.agent_pos.y + ahead * fwd.y + lateral * right.y};
      CellKind kind = CellKind::empty;
      if (level.is_wall(c))
        kind = CellKind::wall;
      else if (c == level.goal)
        kind = CellKind::goal;
      obs.view[static_cast<std::size_t>(row * v + col)] = kind;
    }
  }
  return obs;
}

ResetResult reset(const GridLevel& level, const EnvConfig& config) {
  validate_level(level);
  config.validate();
  EnvState state;
  state.agent_pos = level.start;
  state.agent_dir = level.start_dir;
  return {state, observe(state, level, config)};
}

StepResult step(const EnvState& state, Action action, const GridLevel& level,
                const EnvConfig& config) {
  if (state.done) throw InvalidArgument("step called on a finished episode");
  StepResult out;
  EnvState next = state;
  switch (action) {
    case Action::turn_left:
      next.agent_dir = static_cast<Heading>((static_cast<int>(state.agent_dir) + 3) % 4);
      break;
    case Action::turn_right:
      next.agent_dir = static_cast<Heading>((static_cast<int>(state.agent_dir) + 1) % 4);
      break;
    case Action::forward: {
      const Cell d = heading_vector(state.agent_dir);
      const Cell target{state.agent_pos.x + d.x, state.agent_pos.y + d.y};
      if (!level.is_wall(target)) next.agent_pos = target;
      break;
    }
    default:
      throw InvalidArgument("unknown action");
  }
  next.steps_taken = state.steps_taken + 1;
  if (next.agent_pos == level.goal) {
    out.reward = success_reward(next.steps_taken, config.max_steps);
    next.done = true;
  } else if (next.steps_taken >= config.max_steps) {
    next.done = true;
  }
  out.state = next;
  out.done = next.done;
  out.observation = observe(next, level, config);
  return out;
}

void encode_observation(const Observation& obs, std::span<double> out) {
  const std::size_t cells = obs.view.size();
  if (out.size() != cells * kNumCellKinds + kNumHeadings)
    throw InvalidArgument("feature buffer has the wrong length");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < cells; ++i)
    out[i * kNumCellKinds + static_cast<std::size_t>(obs.view[i])] = 1.0;
  out[cells * kNumCellKinds + static_cast<std::size_t>(obs.dir)] = 1.0;
}

std::vector<double> encode_observation(const Observation& obs) {
  std::vector<double> out(obs.view.size() * kNumCellKinds + kNumHeadings);
  encode_observation(obs, out);
  return out;
}

int shortest_path_length(const GridLevel& level) {
  std::vector<int> dist(static_cast<std::size_t>(level.width * level.height), -1);
  auto idx = [&](Cell c) { return static_cast<std::size_t>(c.y * level.width + c.x); };
  std::deque<Cell> frontier{level.start};
  dist[idx(level.start)] = 0;
  constexpr Cell kMoves[] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    if (c == level.goal) return dist[idx(c)];
    for (const Cell m : kMoves) {
      const Cell n{c.x + m.x, c.y + m.y};
      if (level.is_wall(n) || dist[idx(n)] >= 0) continue;
      dist[idx(n)] = dist[idx(c)] + 1;
      frontier.push_back(n);
    }
  }
  return -1;
}

bool is_solvable(const GridLevel& level) { return shortest_path_length(level) >= 0; }

}  // namespace ued
