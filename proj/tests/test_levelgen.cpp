#include <cmath>
#include <set>
#include <string>

#include "doctest.h"
#include "uedlab/error.hpp"
#include "uedlab/levelgen.hpp"

using namespace ued;

TEST_CASE("zero budget yields an empty room") {
  GeneratorConfig gen;
  gen.block_budget = 0;
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const GridLevel level = random_level(gen, rng);
    CHECK(level.wall_count() == 0);
    CHECK_NOTHROW(validate_level(level));
  }
}

TEST_CASE("generation is a pure function of the seed") {
  GeneratorConfig gen;
  Rng a(77), b(77), c(78);
  const GridLevel la = random_level(gen, a);
  CHECK(la == random_level(gen, b));
  bool any_diff = false;
  Rng a2(77);
  for (int k = 0; k < 5; ++k) any_diff |= !(random_level(gen, a2) == random_level(gen, c));
  CHECK(any_diff);
}

TEST_CASE("mean wall count matches the uniform budget draw") {
  GeneratorConfig gen;  // 9x9 playable
  gen.block_budget = 10;
  Rng rng(2024);
  const int draws = 10000;
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) sum += random_level(gen, rng).wall_count();
  const double mean = sum / draws;
  // Uniform on {0..10}: variance (11^2 - 1) / 12 = 10.
  const double se = std::sqrt(10.0 / draws);
  CHECK(std::abs(mean - 5.0) < 3.0 * se);
}

TEST_CASE("generator config validation") {
  GeneratorConfig gen;
  gen.width = 3;
  gen.height = 3;  // one interior cell
  Rng rng(1);
  CHECK_THROWS_AS(random_level(gen, rng), InvalidArgument);
  gen.width = 4;
  gen.block_budget = 1;  // two interior cells, no room for walls
  CHECK_THROWS_AS(random_level(gen, rng), InvalidArgument);
  gen.block_budget = 0;
  CHECK_NOTHROW(random_level(gen, rng));
}

TEST_CASE("mutation changes exactly one component") {
  GeneratorConfig gen;
  Rng rng(5);
  const GridLevel base = random_level(gen, rng);
  int kinds[3] = {0, 0, 0};
  for (int k = 0; k < 1000; ++k) {
    const GridLevel m = mutate_level(base, rng);
    CHECK_NOTHROW(validate_level(m));
    const int changed = (m.walls != base.walls) + !(m.start == base.start) + !(m.goal == base.goal);
    CHECK(changed == 1);
    CHECK(m.start_dir == base.start_dir);
    if (m.walls != base.walls) {
      CHECK(std::abs(m.wall_count() - base.wall_count()) == 1);
      ++kinds[0];
    }
    kinds[1] += !(m.start == base.start);
    kinds[2] += !(m.goal == base.goal);
  }
  for (int k : kinds) CHECK(k > 250);
}

TEST_CASE("wall toggle is an involution") {
  GridLevel level = GridLevel::empty(7, 7, {1, 1}, Heading::east, {5, 5});
  const GridLevel original = level;
  level.set_wall({3, 3}, true);
  CHECK_FALSE(level == original);
  level.set_wall({3, 3}, false);
  CHECK(level == original);
}

TEST_CASE("mutation fuzzing keeps levels valid") {
  GeneratorConfig gen;
  gen.block_budget = 60;
  Rng rng(9);
  GridLevel level = random_level(gen, rng);
  for (int k = 0; k < 1000; ++k) {
    level = mutate_level(level, rng);
    CHECK_NOTHROW(validate_level(level));
  }
}

TEST_CASE("ASCII format round trip") {
  GeneratorConfig gen;
  gen.block_budget = 40;
  Rng rng(31);
  for (int k = 0; k < 1000; ++k) {
    const GridLevel level = random_level(gen, rng);
    const std::string text = serialize_level(level);
    CHECK(parse_level(text) == level);
    CHECK(serialize_level(parse_level(text)) == text);
  }
}

TEST_CASE("ASCII format layout") {
  GridLevel level = GridLevel::empty(5, 4, {1, 1}, Heading::south, {3, 2});
  level.set_wall({2, 1}, true);
  CHECK(serialize_level(level) ==
        "dir: south\n"
        "#####\n"
        "#S#.#\n"
        "#..G#\n"
        "#####\n");
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse_level(""), ParseError);
  const char* two_goals = "dir: east\n#####\n#SGG#\n#####\n";
  try {
    parse_level(two_goals);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 4);
  }
  try {
    parse_level("dir: east\n#####\n#S.G#\n####\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("ragged") != std::string::npos);
  }
  try {
    parse_level("dir: east\n#####\n#S?G#\n#####\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.column() == 3);
  }
  CHECK_THROWS_AS(parse_level("dir: up\n#####\n#S.G#\n#####\n"), ParseError);
  CHECK_THROWS_AS(parse_level("#####\n#S.G#\n#####\n"), ParseError);
  CHECK_THROWS_AS(parse_level("dir: east\n#####\n#S..#\n#####\n"), ParseError);
  CHECK_THROWS_AS(parse_level("dir: east\n#####\n#S.G.\n#####\n"), ParseError);
  CHECK_THROWS_AS(parse_level("dir: east\n#####\n#SSG#\n#####\n"), ParseError);
}
