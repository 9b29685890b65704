#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "uedlab/env.hpp"
#include "uedlab/error.hpp"
#include "uedlab/levelgen.hpp"

using namespace ued;

namespace {

EnvConfig small_config(int size, int max_steps = 100) {
  EnvConfig c;
  c.width = size;
  c.height = size;
  c.max_steps = max_steps;
  return c;
}

}  // namespace

TEST_CASE("reset places the agent at the start") {
  const GridLevel level = GridLevel::empty(7, 7, {1, 1}, Heading::south, {5, 5});
  const auto r = reset(level, small_config(7));
  CHECK(r.state.agent_pos == Cell{1, 1});
  CHECK(r.state.agent_dir == Heading::south);
  CHECK(r.state.steps_taken == 0);
  CHECK_FALSE(r.state.done);
  const auto again = reset(level, small_config(7));
  CHECK(again.state == r.state);
  CHECK(again.observation == r.observation);
}

TEST_CASE("reset rejects invalid levels") {
  GridLevel level = GridLevel::empty(7, 7, {1, 1}, Heading::east, {5, 5});
  level.set_wall({2, 2}, true);
  level.start = {2, 2};
  CHECK_THROWS_AS(reset(level, small_config(7)), InvalidLevel);
  level.start = {0, 3};
  CHECK_THROWS_AS(reset(level, small_config(7)), InvalidLevel);
  level.start = {5, 5};
  CHECK_THROWS_AS(reset(level, small_config(7)), InvalidLevel);
}

TEST_CASE("movement, walls and turning") {
  const GridLevel level = GridLevel::empty(5, 5, {1, 1}, Heading::north, {3, 3});
  const EnvConfig cfg = small_config(5);
  auto r = reset(level, cfg);
  auto s = step(r.state, Action::forward, level, cfg);  // border above
  CHECK(s.state.agent_pos == Cell{1, 1});
  CHECK(s.reward == 0.0);
  CHECK_FALSE(s.done);
  s = step(s.state, Action::turn_right, level, cfg);
  CHECK(s.state.agent_dir == Heading::east);
  CHECK(s.state.agent_pos == Cell{1, 1});
  s = step(s.state, Action::forward, level, cfg);
  CHECK(s.state.agent_pos == Cell{2, 1});
  s = step(s.state, Action::turn_left, level, cfg);
  CHECK(s.state.agent_dir == Heading::north);
  CHECK(s.state.steps_taken == 4);
}

TEST_CASE("timeout ends the episode with zero reward") {
  const GridLevel level = GridLevel::empty(5, 5, {1, 1}, Heading::north, {3, 3});
  const EnvConfig cfg = small_config(5, 7);
  auto state = reset(level, cfg).state;
  double total = 0.0;
  int steps = 0;
  while (!state.done) {
    auto s = step(state, Action::turn_left, level, cfg);
    total += s.reward;
    state = s.state;
    ++steps;
  }
  CHECK(total == 0.0);
  CHECK(steps == 7);
  CHECK(state.steps_taken == 7);
  CHECK_THROWS_AS(step(state, Action::forward, level, cfg), InvalidArgument);
}

TEST_CASE("success reward") {
  CHECK(success_reward(25, 250) == doctest::Approx(0.91).epsilon(1e-15));
  // One-step solution: start facing the adjacent goal.
  const GridLevel level = GridLevel::empty(5, 5, {1, 1}, Heading::east, {2, 1});
  const EnvConfig cfg = small_config(5, 100);
  auto s = step(reset(level, cfg).state, Action::forward, level, cfg);
  CHECK(s.done);
  CHECK(s.reward == doctest::Approx(1.0 - 0.9 / 100.0).epsilon(1e-15));
}

TEST_CASE("egocentric observation") {
  GridLevel level = GridLevel::empty(7, 7, {3, 3}, Heading::north, {3, 1});
  level.set_wall({4, 2}, true);
  EnvConfig cfg = small_config(7);
  cfg.view_size = 3;
  auto obs = reset(level, cfg).observation;
  // Facing north: row 0 is two cells ahead, column 2 is to the right.
  CHECK(obs.view[0 * 3 + 1] == CellKind::goal);
  CHECK(obs.view[1 * 3 + 2] == CellKind::wall);
  CHECK(obs.view[2 * 3 + 1] == CellKind::empty);
  CHECK(obs.dir == Heading::north);
  // Facing east from (3,3): goal (3,1) is two cells to the left, one ahead... out of a 3x3 view.
  EnvState east{{3, 3}, Heading::east, 0, false};
  auto e = observe(east, level, cfg);
  CHECK(e.view[1 * 3 + 0] == CellKind::wall);  // (4,2) is ahead-left when facing east
  // Near the border everything outside is wall.
  EnvState corner{{1, 1}, Heading::north, 0, false};
  auto c = observe(corner, level, cfg);
  CHECK(c.view[1 * 3 + 0] == CellKind::wall);
  CHECK(c.view[0 * 3 + 1] == CellKind::wall);
}

TEST_CASE("observation encoding is one-hot and injective") {
  EnvConfig cfg = small_config(11);
  const GridLevel level = GridLevel::empty(11, 11, {5, 5}, Heading::west, {2, 2});
  const auto obs = reset(level, cfg).observation;
  const auto f = encode_observation(obs);
  CHECK(f.size() == static_cast<std::size_t>(5 * 5 * 3 + 4));
  CHECK(f.size() == cfg.feature_size());
  for (double v : f) CHECK((v == 0.0 || v == 1.0));
  CHECK(encode_observation(obs) == f);
  for (std::size_t slot = 0; slot < obs.view.size(); ++slot) {
    for (int k = 0; k < kNumCellKinds; ++k) {
      Observation other = obs;
      other.view[slot] = static_cast<CellKind>(k);
      if (other.view[slot] == obs.view[slot]) continue;
      CHECK(encode_observation(other) != f);
    }
  }
  Observation turned = obs;
  turned.dir = Heading::north;
  CHECK(encode_observation(turned) != f);
}

TEST_CASE("solvability") {
  GridLevel open = GridLevel::empty(7, 7, {1, 1}, Heading::east, {5, 5});
  CHECK(is_solvable(open));
  CHECK(shortest_path_length(open) == 8);
  GridLevel boxed = open;
  for (Cell c : {Cell{4, 5}, Cell{5, 4}}) boxed.set_wall(c, true);
  CHECK_FALSE(is_solvable(boxed));
  GridLevel mid = GridLevel::empty(7, 7, {1, 1}, Heading::east, {3, 3});
  for (Cell c : {Cell{2, 3}, Cell{4, 3}, Cell{3, 2}, Cell{3, 4}}) mid.set_wall(c, true);
  CHECK_FALSE(is_solvable(mid));
}

TEST_CASE("solvability agrees with a flood fill on random levels") {
  GeneratorConfig gen;
  gen.width = 11;
  gen.height = 11;
  gen.block_budget = 60;
  Rng rng(41);
  int solvable = 0;
  for (int k = 0; k < 1000; ++k) {
    const GridLevel level = random_level(gen, rng);
    std::vector<bool> free(static_cast<std::size_t>(level.width * level.height));
    for (int y = 0; y < level.height; ++y)
      for (int x = 0; x < level.width; ++x) free[static_cast<std::size_t>(y * level.width + x)] = !level.is_wall({x, y});
    const bool expected = oracle::flood_reachable(free, level.width, level.height, level.start.x, level.start.y,
                                                  level.goal.x, level.goal.y);
    CHECK(is_solvable(level) == expected);
    solvable += expected;
  }
  CHECK(solvable > 0);
  CHECK(solvable < 1000);
}

TEST_CASE("random action sequences respect the environment invariants") {
  GeneratorConfig gen;
  Rng rng(43);
  EnvConfig cfg;
  cfg.max_steps = 40;
  for (int k = 0; k < 200; ++k) {
    const GridLevel level = random_level(gen, rng);
    std::vector<Action> actions(40);
    for (auto& a : actions) a = static_cast<Action>(rng.below(3));
    auto run = [&]() {
      std::vector<StepResult> trace;
      auto state = reset(level, cfg).state;
      for (Action a : actions) {
        if (state.done) break;
        trace.push_back(step(state, a, level, cfg));
        state = trace.back().state;
      }
      return trace;
    };
    const auto t1 = run();
    const auto t2 = run();
    REQUIRE(t1.size() == t2.size());
    int rewarded = 0;
    for (std::size_t i = 0; i < t1.size(); ++i) {
      CHECK(t1[i].state == t2[i].state);
      CHECK(t1[i].observation == t2[i].observation);
      CHECK(t1[i].reward == t2[i].reward);
      CHECK(t1[i].reward >= 0.0);
      CHECK(t1[i].reward <= 1.0);
      CHECK_FALSE(level.is_wall(t1[i].state.agent_pos));
      CHECK(t1[i].state.steps_taken <= cfg.max_steps);
      rewarded += t1[i].reward > 0.0;
    }
    CHECK(rewarded <= 1);
  }
}
