#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "uedlab/env.hpp"
#include "uedlab/rng.hpp"

namespace ued {

struct GeneratorConfig {
  int block_budget = 15;
  int width = 11;
  int height = 11;
  std::uint64_t seed = 0;

  int interior_cells() const { return (width - 2) * (height - 2); }
  void validate() const;
};

/// Domain-randomization draw: a uniform wall count in [0, budget], distinct
/// wall cells, then distinct start and goal among the remaining free cells.
GridLevel random_level(const GeneratorConfig& config, Rng& rng);

/// Single edit: toggle one interior wall, relocate the start, or relocate
/// the goal, each with probability 1/3.
GridLevel mutate_level(const GridLevel& level, Rng& rng);

/// ASCII level text. First line `dir: <heading>`, then one row per line with
/// '#' wall, '.' empty, 'S' start and 'G' goal. The border ring is written
/// out as '#'.
std::string serialize_level(const GridLevel& level);
GridLevel parse_level(std::string_view text);

GridLevel load_level(const std::string& path);
void save_level(const GridLevel& level, const std::string& path);

}  // namespace ued
