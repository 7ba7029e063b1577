#pragma once

#include <string>
#include <variant>
#include <vector>

#include "capolab/policy.hpp"
#include "capolab/rng.hpp"

namespace capolab {

// Stateless one-step environment: context c, action a, reward drawn
// Bernoulli(reward_table[c][a]). Contexts are visited round-robin by the
// rollout layer.
struct GroupedBandit {
  std::vector<std::vector<double>> reward_table;  // contexts x actions, success probs

  int num_contexts() const { return static_cast<int>(reward_table.size()); }
  int num_actions() const { return reward_table.empty() ? 0 : static_cast<int>(reward_table[0].size()); }
  int horizon() const { return 1; }
};

// Multi-step chain: `tasks` independent chains of length T over K actions.
// At step t of task c the correct action is (c + t) mod K. Episodes always
// run the full T steps; the reward is sparse and binary: step rewards are 0
// except the terminal step, which pays 1 iff every step's action was correct.
// The policy observes flattened context id c*T + t, so a deterministic
// optimal policy exists within the tabular family.
// flip_prob > 0 adds reward-label noise: the terminal reward bit is flipped
// with that probability.
struct ChainTask {
  int tasks = 1;
  int actions = 2;
  int chain_length = 2;
  double flip_prob = 0.0;

  int num_contexts() const { return tasks * chain_length; }
  int num_actions() const { return actions; }
  int horizon() const { return chain_length; }
  int correct_action(int task, int step) const { return (task + step) % actions; }
  int context_id(int task, int step) const { return task * chain_length + step; }
};

using Env = std::variant<GroupedBandit, ChainTask>;

int env_num_contexts(const Env& env);
int env_num_actions(const Env& env);
int env_horizon(const Env& env);
// Number of root tasks (bandit: contexts; chain: tasks). Rollouts cycle
// through these when assigning groups.
int env_num_tasks(const Env& env);

// Zero-mean Gaussian perturbation applied to advantages after estimation;
// sigma = 0 is the exact regime.
struct NoiseModel {
  double sigma = 0.0;
};

// G trajectories that share one task (one prompt's candidate group).
struct TrajectoryGroup {
  int task_id = 0;
  std::vector<Trajectory> items;

  int size() const { return static_cast<int>(items.size()); }
};

// Sample one episode of `env` for the given root task under `params`.
// RNG draws, in order: one categorical per step, then (bandit) one uniform
// for the Bernoulli reward, or (chain, flip_prob > 0) one bernoulli for the
// terminal label flip.
Trajectory rollout(const Env& env, const PolicyParams& params, int task_id, Rng& rng);

// G i.i.d. episodes of the same task. Requires G >= 2 (group-relative
// estimators are undefined below that); throws std::invalid_argument.
TrajectoryGroup rollout_group(const Env& env, const PolicyParams& params, int task_id,
                              int group_size, Rng& rng);

// Perturbs each token advantage by i.i.d. N(0, sigma^2) and recomputes the
// scalar aggregate from the noised tokens. sigma == 0 consumes no RNG draws
// and leaves the trajectory untouched. Requires populated advantages.
void inject_advantage_noise(Trajectory& traj, const NoiseModel& noise, Rng& rng);

// Batch convenience: applies the trajectory op in batch order.
void inject_advantage_noise(std::vector<TrajectoryGroup>& batch, const NoiseModel& noise,
                            Rng& rng);

// Best achievable expected total reward over deterministic policies
// (uniform task distribution).
double optimal_expected_reward(const Env& env);

// Exact expected total reward of `params` on `env`: closed form for the
// bandit, product of per-step correct probabilities for the chain. The
// chain value is the true success probability; reward-label noise is not
// part of the expectation.
double expected_policy_reward(const Env& env, const PolicyParams& params);

}  // namespace capolab
