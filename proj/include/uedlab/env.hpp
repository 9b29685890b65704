#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ued {

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class Heading : std::uint8_t { north = 0, east = 1, south = 2, west = 3 };
enum class Action : std::uint8_t { turn_left = 0, turn_right = 1, forward = 2 };

inline constexpr int kNumActions = 3;
inline constexpr int kNumHeadings = 4;

const char* heading_name(Heading h);
Heading parse_heading(const std::string& name);
Cell heading_vector(Heading h);

/// One environment parameterization. Width and height count the whole grid;
/// the outermost ring of cells is always wall and is not stored in `walls`.
struct GridLevel {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> walls;  // row-major, width * height, interior only
  Cell start;
  Heading start_dir = Heading::east;
  Cell goal;

  static GridLevel empty(int width, int height, Cell start, Heading dir, Cell goal);

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_border(Cell c) const {
    return c.x == 0 || c.y == 0 || c.x == width - 1 || c.y == height - 1;
  }
  bool is_interior(Cell c) const { return in_bounds(c) && !is_border(c); }
  /// True for stored walls, border cells and anything off the grid.
  bool is_wall(Cell c) const;
  void set_wall(Cell c, bool on);
  int wall_count() const;

  friend bool operator==(const GridLevel&, const GridLevel&) = default;
};

/// Throws InvalidLevel describing the first violated invariant.
void validate_level(const GridLevel& level);

struct EnvConfig {
  int width = 11;  // 9x9 playable area plus border
  int height = 11;
  int max_steps = 100;
  int view_size = 5;
  double gamma = 0.995;

  void validate() const;
  std::size_t feature_size() const;
};

struct EnvState {
  Cell agent_pos;
  Heading agent_dir = Heading::east;
  int steps_taken = 0;
  bool done = false;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

enum class CellKind : std::uint8_t { empty = 0, wall = 1, goal = 2 };
inline constexpr int kNumCellKinds = 3;

/// Egocentric view. `view` is row-major V x V with the agent at the bottom
/// centre looking towards row 0.
struct Observation {
  int view_size = 0;
  std::vector<CellKind> view;
  Heading dir = Heading::east;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct StepResult {
  EnvState state;
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

struct ResetResult {
  EnvState state;
  Observation observation;
};

ResetResult reset(const GridLevel& level, const EnvConfig& config);
StepResult step(const EnvState& state, Action action, const GridLevel& level,
                const EnvConfig& config);
Observation observe(const EnvState& state, const GridLevel& level, const EnvConfig& config);

/// Success reward for reaching the goal after `steps_taken` steps.
double success_reward(int steps_taken, int max_steps);

std::size_t feature_size(int view_size);
/// One-hot cell kinds followed by a one-hot heading.
std::vector<double> encode_observation(const Observation& obs);
void encode_observation(const Observation& obs, std::span<double> out);

/// Goal reachable from start through 4-connected free cells.
bool is_solvable(const GridLevel& level);
/// Length of the shortest 4-connected path, or -1.
int shortest_path_length(const GridLevel& level);

}  // namespace ued
