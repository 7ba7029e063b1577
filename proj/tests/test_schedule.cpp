#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "capolab/schedule.hpp"

#include <stdexcept>
#include <vector>

using namespace capolab;

TEST_CASE("switch step is the floor of fraction times total steps") {
  CHECK(PhaseSchedule{0.2, 1000}.switch_step() == 200);
  CHECK(PhaseSchedule{0.0, 1000}.switch_step() == 0);
  CHECK(PhaseSchedule{1.0, 1000}.switch_step() == 1000);
  CHECK(PhaseSchedule{0.333, 10}.switch_step() == 3);
  CHECK(PhaseSchedule{0.5, 7}.switch_step() == 3);
}

TEST_CASE("boundary steps around the switch") {
  PhaseSchedule s{0.2, 1000};
  CHECK(current_phase(s, 0) == Phase::Imitation);
  CHECK(current_phase(s, 199) == Phase::Imitation);
  CHECK(current_phase(s, 200) == Phase::Discrimination);
  CHECK(current_phase(s, 999) == Phase::Discrimination);
}

TEST_CASE("degenerate fractions") {
  PhaseSchedule zero{0.0, 100};
  CHECK(current_phase(zero, 0) == Phase::Discrimination);  // never imitates
  PhaseSchedule one{1.0, 100};
  for (int step : {0, 50, 99})
    CHECK(current_phase(one, step) == Phase::Imitation);  // never discriminates
}

TEST_CASE("phase is monotone: once discrimination, always discrimination") {
  PhaseSchedule s{0.37, 219};
  bool seen_discrimination = false;
  for (int step = 0; step < 219; ++step) {
    const Phase p = current_phase(s, step);
    if (seen_discrimination) CHECK(p == Phase::Discrimination);
    if (p == Phase::Discrimination) seen_discrimination = true;
  }
  CHECK(seen_discrimination);
}

TEST_CASE("out-of-range steps throw") {
  PhaseSchedule s{0.2, 100};
  CHECK_THROWS_AS(current_phase(s, -1), std::out_of_range);
  CHECK_THROWS_AS(current_phase(s, 100), std::out_of_range);
}

TEST_CASE("imitation mask admits only non-negative scalars") {
  std::vector<double> adv{1.5, -0.25, 0.0, -3.0, 2.0};
  auto m1 = advantage_mask(Phase::Imitation, adv);
  REQUIRE(m1.size() == 5);
  CHECK(m1[0] == 1);
  CHECK(m1[1] == 0);
  CHECK(m1[2] == 1);  // zero passes the gate
  CHECK(m1[3] == 0);
  CHECK(m1[4] == 1);
  auto m2 = advantage_mask(Phase::Discrimination, adv);
  for (char c : m2) CHECK(c == 1);
}

TEST_CASE("batch mask mirrors stored scalar advantages") {
  Trajectory t;
  t.context_ids = {0};
  t.actions = {0};
  t.behavior_logps = {-0.7};
  t.rewards = {1.0};
  t.advantage_tokens = {0.5};
  t.advantage_scalar = 0.5;
  Trajectory u = t;
  u.advantage_tokens = {-0.5};
  u.advantage_scalar = -0.5;
  TrajectoryGroup g;
  g.items = {t, u};
  std::vector<TrajectoryGroup> batch{g, g};
  auto masks = advantage_mask(batch, Phase::Imitation);
  REQUIRE(masks.size() == 2);
  for (const auto& m : masks) {
    REQUIRE(m.size() == 2);
    CHECK(m[0] == 1);
    CHECK(m[1] == 0);
  }
}

TEST_CASE("difficulty probe matches the policy's true pass rate") {
  // Deterministic policy on a 2-task chain: task 0 always solved, task 1 never.
  ChainTask chain;
  chain.tasks = 2;
  chain.actions = 2;
  chain.chain_length = 2;
  Env env = chain;
  PolicyParams params(4, 2);
  for (int step = 0; step < 2; ++step) {
    params.logits(chain.context_id(0, step), chain.correct_action(0, step)) = 60.0;
    const int wrong = 1 - chain.correct_action(1, step);
    params.logits(chain.context_id(1, step), wrong) = 60.0;
  }
  Rng rng(8);
  auto easy = estimate_difficulty(env, params, 0, 32, rng);
  auto hard = estimate_difficulty(env, params, 1, 32, rng);
  CHECK(easy.task_id == 0);
  CHECK(easy.k == 32);
  CHECK(easy.pass_rate == 1.0);
  CHECK(hard.pass_rate == 0.0);
}

TEST_CASE("curriculum order: descending pass rate, ties ascending id") {
  std::vector<DifficultyEstimate> est{
      {0, 8, 0.25}, {1, 8, 1.0}, {2, 8, 0.25}, {3, 8, 0.5}};
  auto order = static_curriculum_order(est);
  CHECK(order == std::vector<int>{1, 3, 0, 2});
}

TEST_CASE("probe-everything overload covers every task exactly once") {
  Env env = GroupedBandit{{{0.9, 0.1}, {0.1, 0.9}, {0.5, 0.5}}};
  PolicyParams params(3, 2);
  Rng rng(21);
  auto order = static_curriculum_order(env, params, 16, rng);
  REQUIRE(order.size() == 3);
  std::vector<char> seen(3, 0);
  for (int id : order) {
    REQUIRE(id >= 0);
    REQUIRE(id < 3);
    seen[static_cast<size_t>(id)] = 1;
  }
  for (char c : seen) CHECK(c == 1);
}

TEST_CASE("unlocked prefix grows from one task to all tasks") {
  const int tasks = 5, total = 100;
  CHECK(static_unlocked_count(tasks, 0, total) == 1);
  CHECK(static_unlocked_count(tasks, total - 1, total) == 5);
  int prev = 0;
  for (int step = 0; step < total; ++step) {
    const int n = static_unlocked_count(tasks, step, total);
    CHECK(n >= 1);
    CHECK(n <= tasks);
    CHECK(n >= prev);  // monotone non-decreasing
    prev = n;
  }
  // Single-task envs are always fully unlocked.
  for (int step : {0, 10, 99}) CHECK(static_unlocked_count(1, step, total) == 1);
}
