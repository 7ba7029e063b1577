#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "capolab/advantage.hpp"
#include "capolab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

using namespace capolab;

namespace {

Trajectory one_step_traj(int context, double reward) {
  Trajectory t;
  t.context_ids = {context};
  t.actions = {0};
  t.behavior_logps = {-0.5};
  t.rewards = {reward};
  return t;
}

TrajectoryGroup group_from_rewards(const std::vector<double>& rewards, int task = 0) {
  TrajectoryGroup g;
  g.task_id = task;
  for (double r : rewards) g.items.push_back(one_step_traj(task, r));
  return g;
}

std::vector<double> scalar_advantages(const TrajectoryGroup& g) {
  std::vector<double> out;
  for (const auto& t : g.items) out.push_back(t.advantage_scalar);
  return out;
}

}  // namespace

TEST_CASE("group normalization worked example: [1,0,0,1] -> [1,-1,-1,1]") {
  auto g = group_from_rewards({1, 0, 0, 1});
  grpo_advantage(g);
  auto a = scalar_advantages(g);
  // mean 0.5, population std 0.5, eps 1e-8: values just under +/-1.
  CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(a[1] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(a[2] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(a[3] == doctest::Approx(1.0).epsilon(1e-6));
  for (const auto& t : g.items) {
    REQUIRE(t.has_advantages());
    CHECK(t.advantage_tokens[0] == t.advantage_scalar);
  }
}

TEST_CASE("leave-one-out worked example: [1,0,0,1] -> [2/3,-2/3,-2/3,2/3]") {
  auto g = group_from_rewards({1, 0, 0, 1});
  rloo_advantage(g);
  auto a = scalar_advantages(g);
  CHECK(a[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(a[2] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(a[3] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("zero-variance group yields exactly zero, never NaN") {
  for (double r : {0.0, 1.0}) {
    auto g = group_from_rewards({r, r, r, r});
    grpo_advantage(g);
    for (double a : scalar_advantages(g)) CHECK(a == 0.0);
    auto g2 = group_from_rewards({r, r, r, r});
    rloo_advantage(g2);
    for (double a : scalar_advantages(g2)) CHECK(a == 0.0);
  }
  std::vector<TrajectoryGroup> batch{group_from_rewards({1, 1}),
                                     group_from_rewards({1, 1}, 1)};
  reinforcepp_advantage(batch);
  for (const auto& g : batch)
    for (double a : scalar_advantages(g)) CHECK(a == 0.0);
}

TEST_CASE("randomized brute-force oracles for the group kernels") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(14));
    std::vector<double> rewards(n);
    for (auto& r : rewards) r = rng.bernoulli(0.5) ? 1.0 : 0.0;
    if (rng.bernoulli(0.2)) rewards.assign(n, rewards[0]);  // force degenerates

    // Independent recomputation with naive loops.
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double sq = 0.0;
    for (double r : rewards) sq += (r - mean) * (r - mean);
    const double std_pop = std::sqrt(sq / n);

    auto grpo = group_normalized_values(rewards, 1e-8);
    auto rloo = leave_one_out_values(rewards);
    REQUIRE(grpo.size() == rewards.size());
    REQUIRE(rloo.size() == rewards.size());

    double grpo_sum = 0.0, rloo_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double expect_grpo = std_pop == 0.0 ? 0.0 : (rewards[i] - mean) / (std_pop + 1e-8);
      CHECK(grpo[i] == doctest::Approx(expect_grpo).epsilon(1e-10).scale(1.0));
      double others = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) others += rewards[j];
      CHECK(rloo[i] ==
            doctest::Approx(rewards[i] - others / (n - 1)).epsilon(1e-12).scale(1.0));
      grpo_sum += grpo[i];
      rloo_sum += rloo[i];
    }
    CHECK(std::abs(rloo_sum) <= 1e-12 * n);
    if (std_pop > 0.0) CHECK(std::abs(grpo_sum) <= 1e-10 * n);
  }
}

TEST_CASE("group kernels commute with permutation") {
  std::vector<double> rewards{1, 0, 1, 1, 0, 0, 1, 0};
  auto grpo = group_normalized_values(rewards, 1e-8);
  auto rloo = leave_one_out_values(rewards);
  std::vector<size_t> perm{3, 0, 7, 5, 1, 6, 2, 4};
  std::vector<double> shuffled(8);
  for (size_t i = 0; i < 8; ++i) shuffled[i] = rewards[perm[i]];
  auto grpo_s = group_normalized_values(shuffled, 1e-8);
  auto rloo_s = leave_one_out_values(shuffled);
  for (size_t i = 0; i < 8; ++i) {
    CHECK(grpo_s[i] == doctest::Approx(grpo[perm[i]]).epsilon(1e-14));
    CHECK(rloo_s[i] == doctest::Approx(rloo[perm[i]]).epsilon(1e-14));
  }
}

TEST_CASE("global standardization pools across groups") {
  // Rewards 1,0 | 0,0: batch mean 0.25, population std sqrt(3)/4.
  std::vector<TrajectoryGroup> batch{group_from_rewards({1, 0}),
                                     group_from_rewards({0, 0}, 1)};
  reinforcepp_advantage(batch);
  const double std_pop = std::sqrt(3.0) / 4.0;
  CHECK(batch[0].items[0].advantage_scalar ==
        doctest::Approx(0.75 / (std_pop + 1e-8)).epsilon(1e-9));
  CHECK(batch[0].items[1].advantage_scalar ==
        doctest::Approx(-0.25 / (std_pop + 1e-8)).epsilon(1e-9));
  CHECK(batch[1].items[0].advantage_scalar ==
        doctest::Approx(-0.25 / (std_pop + 1e-8)).epsilon(1e-9));
  // Standardized batch has mean ~0 and unit population variance (up to eps).
  double sum = 0.0, sq = 0.0;
  int count = 0;
  for (const auto& g : batch)
    for (const auto& t : g.items) {
      sum += t.advantage_scalar;
      sq += t.advantage_scalar * t.advantage_scalar;
      ++count;
    }
  CHECK(std::abs(sum / count) <= 1e-10);
  CHECK(sq / count == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("GAE worked example: V=0, gamma=0.5, lambda=1, rewards [0,0,1]") {
  Trajectory traj;
  traj.context_ids = {0, 1, 2};
  traj.actions = {0, 0, 0};
  traj.behavior_logps = {-0.7, -0.7, -0.7};
  traj.rewards = {0.0, 0.0, 1.0};
  ValueTable values{std::vector<double>(3, 0.0)};
  gae_advantage(traj, values, GaeConfig{0.5, 1.0});
  REQUIRE(traj.advantage_tokens.size() == 3);
  CHECK(traj.advantage_tokens[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(traj.advantage_tokens[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(traj.advantage_tokens[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(traj.advantage_scalar ==
        doctest::Approx((0.25 + 0.5 + 1.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("GAE with zero values and gamma=lambda=1 is the return-to-go") {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 1 + static_cast<int>(rng.uniform_int(6));
    Trajectory traj;
    for (int t = 0; t < len; ++t) {
      traj.context_ids.push_back(t);
      traj.actions.push_back(0);
      traj.behavior_logps.push_back(-0.3);
      traj.rewards.push_back(rng.uniform());
    }
    ValueTable values{std::vector<double>(static_cast<size_t>(len), 0.0)};
    gae_advantage(traj, values, GaeConfig{1.0, 1.0});
    for (int t = 0; t < len; ++t) {
      double rtg = 0.0;
      for (int u = t; u < len; ++u) rtg += traj.rewards[u];
      CHECK(traj.advantage_tokens[t] == doctest::Approx(rtg).epsilon(1e-12));
    }
  }
}

TEST_CASE("GAE recursion matches a direct forward-sum oracle") {
  Rng rng(66);
  for (int trial = 0; trial < 300; ++trial) {
    const int len = 1 + static_cast<int>(rng.uniform_int(5));
    const double gamma = rng.uniform();
    const double lambda = rng.uniform();
    Trajectory traj;
    std::vector<double> vals(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
      traj.context_ids.push_back(t);
      traj.actions.push_back(0);
      traj.behavior_logps.push_back(-0.3);
      traj.rewards.push_back(rng.normal(0.0, 1.0));
      vals[static_cast<size_t>(t)] = rng.normal(0.0, 1.0);
    }
    ValueTable values{vals};
    Trajectory copy = traj;
    gae_advantage(copy, values, GaeConfig{gamma, lambda});
    // Oracle: A_t = sum_k (gamma*lambda)^k delta_{t+k}, V(s_len) = 0.
    for (int t = 0; t < len; ++t) {
      double acc = 0.0, w = 1.0;
      for (int u = t; u < len; ++u) {
        const double vnext = (u + 1 < len) ? vals[static_cast<size_t>(u + 1)] : 0.0;
        acc += w * (traj.rewards[u] + gamma * vnext - vals[static_cast<size_t>(u)]);
        w *= gamma * lambda;
      }
      CHECK(copy.advantage_tokens[t] == doctest::Approx(acc).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("GAE throws when a context has no value entry") {
  Trajectory traj = one_step_traj(5, 1.0);
  ValueTable values{std::vector<double>(3, 0.0)};
  CHECK_THROWS_AS(gae_advantage(traj, values, GaeConfig{}), std::out_of_range);
}

TEST_CASE("value fit averages discounted return-to-go per context") {
  // Two 2-step trajectories visiting contexts (0, 1) with gamma = 0.5.
  auto make = [](double r0, double r1) {
    Trajectory t;
    t.context_ids = {0, 1};
    t.actions = {0, 0};
    t.behavior_logps = {-0.7, -0.7};
    t.rewards = {r0, r1};
    return t;
  };
  TrajectoryGroup g;
  g.items = {make(0.0, 1.0), make(1.0, 0.0)};
  std::vector<TrajectoryGroup> batch{g};
  auto table = fit_value_table(batch, 3, 0.5);
  // Context 0 returns: 0 + 0.5*1 = 0.5 and 1 + 0.5*0 = 1 -> mean 0.75.
  CHECK(table.value(0) == doctest::Approx(0.75).epsilon(1e-12));
  // Context 1 returns: 1 and 0 -> mean 0.5.
  CHECK(table.value(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(table.value(2) == 0.0);  // unvisited
}

TEST_CASE("apply_advantages dispatches every estimator") {
  Rng rng(88);
  Env env = GroupedBandit{{{0.9, 0.1}, {0.2, 0.8}}};
  PolicyParams params(2, 2);
  for (auto kind : {EstimatorKind::Grpo, EstimatorKind::Ppo, EstimatorKind::Rloo,
                    EstimatorKind::Reinforcepp}) {
    std::vector<TrajectoryGroup> batch;
    batch.push_back(rollout_group(env, params, 0, 6, rng));
    batch.push_back(rollout_group(env, params, 1, 6, rng));
    apply_advantages(batch, kind, env_num_contexts(env), GaeConfig{}, 1e-8);
    for (const auto& g : batch)
      for (const auto& t : g.items) {
        REQUIRE(t.has_advantages());
        CHECK(std::isfinite(t.advantage_scalar));
        CHECK(t.advantage_scalar ==
              doctest::Approx(trajectory_aggregate(t.advantage_tokens)).epsilon(1e-12));
      }
  }
}

TEST_CASE("PPO dispatch centres one-step advantages at the context mean") {
  // One-step env: GAE with fitted values reduces to r - mean(r | context).
  Env env = GroupedBandit{{{0.5, 0.5}}};
  PolicyParams params(1, 2);
  Rng rng(4);
  std::vector<TrajectoryGroup> batch;
  batch.push_back(rollout_group(env, params, 0, 16, rng));
  double mean_reward = 0.0;
  for (const auto& t : batch[0].items) mean_reward += t.rewards[0];
  mean_reward /= 16.0;
  apply_advantages(batch, EstimatorKind::Ppo, 1, GaeConfig{}, 1e-8);
  for (const auto& t : batch[0].items)
    CHECK(t.advantage_scalar ==
          doctest::Approx(t.rewards[0] - mean_reward).epsilon(1e-12));
}

TEST_CASE("estimator name round-trip and rejection") {
  for (auto kind : {EstimatorKind::Grpo, EstimatorKind::Ppo, EstimatorKind::Rloo,
                    EstimatorKind::Reinforcepp})
    CHECK(estimator_from_string(estimator_to_string(kind)) == kind);
  CHECK_THROWS_AS(estimator_from_string("sarsa"), std::invalid_argument);
}

TEST_CASE("advantage profile summarizes scalars") {
  std::vector<TrajectoryGroup> batch{group_from_rewards({1, 0, 0, 1})};
  grpo_advantage(batch[0]);
  auto profile = summarize_advantages(batch);
  CHECK(profile.count == 4);
  CHECK(profile.mean == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(profile.stddev == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(profile.frac_positive == doctest::Approx(0.5).epsilon(1e-12));
  // Zero counts as non-negative.
  std::vector<TrajectoryGroup> flat{group_from_rewards({1, 1})};
  grpo_advantage(flat[0]);
  CHECK(summarize_advantages(flat).frac_positive == 1.0);
}

TEST_CASE("trajectory aggregate rejects empty input") {
  CHECK_THROWS(trajectory_aggregate({}));
  CHECK(trajectory_aggregate({0.5, 1.5}) == doctest::Approx(1.0).epsilon(1e-15));
}
