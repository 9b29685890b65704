#include "uedlab/levelgen.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "uedlab/error.hpp"

namespace ued {

void GeneratorConfig::validate() const {
  if (width < 3 || height < 3) throw InvalidArgument("generator grid must be at least 3x3");
  if (interior_cells() < 2)
    throw InvalidArgument("grid too small to place both start and goal");
  if (block_budget < 0 || block_budget > interior_cells() - 2)
    throw InvalidArgument("block_budget must lie in [0, " + std::to_string(interior_cells() - 2) + "]");
}

GridLevel random_level(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  GridLevel level = GridLevel::empty(config.width, config.height, {}, Heading::east, {});
  const int iw = config.width - 2;
  std::vector<int> cells(static_cast<std::size_t>(config.interior_cells()));
  std::iota(cells.begin(), cells.end(), 0);
  auto cell_at = [&](int k) { return Cell{1 + k % iw, 1 + k / iw}; };

  const int blocks = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.block_budget) + 1));
  // Partial Fisher-Yates: the first blocks+2 slots become walls, start, goal.
  const int picks = blocks + 2;
  for (int i = 0; i < picks; ++i) {
    const auto j = i + static_cast<int>(rng.below(cells.size() - static_cast<std::size_t>(i)));
    std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
  }
  for (int i = 0; i < blocks; ++i) level.set_wall(cell_at(cells[static_cast<std::size_t>(i)]), true);
  level.start = cell_at(cells[static_cast<std::size_t>(blocks)]);
  level.goal = cell_at(cells[static_cast<std::size_t>(blocks + 1)]);
  level.start_dir = static_cast<Heading>(rng.below(kNumHeadings));
  return level;
}

namespace {

Cell random_interior(const GridLevel& level, Rng& rng) {
  const int iw = level.width - 2;
  const int ih = level.height - 2;
  const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(iw * ih)));
  return {1 + k % iw, 1 + k / iw};
}

}  // namespace

GridLevel mutate_level(const GridLevel& level, Rng& rng) {
  validate_level(level);
  const int interior = (level.width - 2) * (level.height - 2);
  for (;;) {
    GridLevel out = level;
    switch (rng.below(3)) {
      case 0: {
        if (interior <= 2) continue;
        Cell c = random_interior(level, rng);
        while (c == level.start || c == level.goal) c = random_interior(level, rng);
        out.set_wall(c, !level.is_wall(c));
        return out;
      }
      case 1: {
        const int free = interior - level.wall_count() - 2;
        if (free <= 0) continue;
        Cell c = random_interior(level, rng);
        while (level.is_wall(c) || c == level.start || c == level.goal) c = random_interior(level, rng);
        out.start = c;
        return out;
      }
      default: {
        const int free = interior - level.wall_count() - 2;
        if (free <= 0) continue;
        Cell c = random_interior(level, rng);
        while (level.is_wall(c) || c == level.start || c == level.goal) c = random_interior(level, rng);
        out.goal = c;
        return out;
      }
    }
  }
}

std::string serialize_level(const GridLevel& level) {
  std::string out = "dir: ";
  out += heading_name(level.start_dir);
  out += '\n';
  for (int y = 0; y < level.height; ++y) {
    for (int x = 0; x < level.width; ++x) {
      const Cell c{x, y};
      if (c == level.start)
        out += 'S';
      else if (c == level.goal)
        out += 'G';
      else
        out += level.is_wall(c) ? '#' : '.';
    }
    out += '\n';
  }
  return out;
}

GridLevel parse_level(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::string current;
    for (char ch : text) {
      if (ch == '\n') {
        lines.push_back(current);
        current.clear();
      } else if (ch != '\r') {
        current += ch;
      }
    }
    if (!current.empty()) lines.push_back(current);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("empty level text", 0, 0);

  const std::string& header = lines[0];
  const std::string prefix = "dir:";
  if (header.rfind(prefix, 0) != 0) throw ParseError("expected header 'dir: <heading>'", 1, 1);
  std::string dir_name = header.substr(prefix.size());
  const auto first = dir_name.find_first_not_of(" \t");
  const auto last = dir_name.find_last_not_of(" \t");
  dir_name = first == std::string::npos ? "" : dir_name.substr(first, last - first + 1);
  Heading dir;
  try {
    dir = parse_heading(dir_name);
  } catch (const InvalidArgument&) {
    throw ParseError("unknown heading '" + dir_name + "'", 1, prefix.size() + 1);
  }

  const std::size_t rows = lines.size() - 1;
  if (rows < 3) throw ParseError("grid needs at least 3 rows", lines.size(), 1);
  const std::size_t cols = lines[1].size();
  if (cols < 3) throw ParseError("grid needs at least 3 columns", 2, 1);

  GridLevel level = GridLevel::empty(static_cast<int>(cols), static_cast<int>(rows), {}, dir, {});
  bool have_start = false;
  bool have_goal = false;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string& line = lines[r + 1];
    const std::size_t line_no = r + 2;
    if (line.size() != cols)
      throw ParseError("ragged row: expected " + std::to_string(cols) + " cells, found " +
                           std::to_string(line.size()),
                       line_no, std::min(line.size(), cols) + 1);
    for (std::size_t c = 0; c < cols; ++c) {
      const Cell cell{static_cast<int>(c), static_cast<int>(r)};
      const char g = line[c];
      const bool border = level.is_border(cell);
      if (border && g != '#') throw ParseError("border cell must be '#'", line_no, c + 1);
      switch (g) {
        case '#':
          if (!border) level.set_wall(cell, true);
          break;
        case '.':
          break;
        case 'S':
          if (have_start) throw ParseError("duplicate start 'S'", line_no, c + 1);
          have_start = true;
          level.start = cell;
          break;
        case 'G':
          if (have_goal) throw ParseError("duplicate goal 'G'", line_no, c + 1);
          have_goal = true;
          level.goal = cell;
          break;
        default:
          throw ParseError(std::string("unknown glyph '") + g + "'", line_no, c + 1);
      }
    }
  }
  if (!have_start) throw ParseError("missing start 'S'", 0, 0);
  if (!have_goal) throw ParseError("missing goal 'G'", 0, 0);
  return level;
}

GridLevel load_level(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open level file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_level(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path, e);
  }
}

void save_level(const GridLevel& level, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write level file '" + path + "'");
  out << serialize_level(level);
  if (!out) throw IoError("failed writing level file '" + path + "'");
}

}  // namespace ued
