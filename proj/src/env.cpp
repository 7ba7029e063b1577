#include "capolab/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "capolab/advantage.hpp"

namespace capolab {

int env_num_contexts(const Env& env) {
  return std::visit([](const auto& e) { return e.num_contexts(); }, env);
}

int env_num_actions(const Env& env) {
  return std::visit([](const auto& e) { return e.num_actions(); }, env);
}

int env_horizon(const Env& env) {
  return std::visit([](const auto& e) { return e.horizon(); }, env);
}

int env_num_tasks(const Env& env) {
  if (const auto* chain = std::get_if<ChainTask>(&env)) return chain->tasks;
  return std::get<GroupedBandit>(env).num_contexts();
}

Trajectory rollout(const Env& env, const PolicyParams& params, int task_id, Rng& rng) {
  if (task_id < 0 || task_id >= env_num_tasks(env))
    throw std::out_of_range("task id " + std::to_string(task_id) + " out of range");
  Trajectory traj;
  if (const auto* bandit = std::get_if<GroupedBandit>(&env)) {
    auto [action, logp] = sample_action(params, task_id, rng);
    const double p = bandit->reward_table[static_cast<size_t>(task_id)][static_cast<size_t>(action)];
    traj.context_ids.push_back(task_id);
    traj.actions.push_back(action);
    traj.behavior_logps.push_back(logp);
    traj.rewards.push_back(rng.bernoulli(p) ? 1.0 : 0.0);
    return traj;
  }
  const auto& chain = std::get<ChainTask>(env);
  bool all_correct = true;
  for (int t = 0; t < chain.chain_length; ++t) {
    const int ctx = chain.context_id(task_id, t);
    auto [action, logp] = sample_action(params, ctx, rng);
    traj.context_ids.push_back(ctx);
    traj.actions.push_back(action);
    traj.behavior_logps.push_back(logp);
    traj.rewards.push_back(0.0);
    if (action != chain.correct_action(task_id, t)) all_correct = false;
  }
  double terminal = all_correct ? 1.0 : 0.0;
  if (chain.flip_prob > 0.0 && rng.bernoulli(chain.flip_prob)) terminal = 1.0 - terminal;
  traj.rewards.back() = terminal;
  return traj;
}

TrajectoryGroup rollout_group(const Env& env, const PolicyParams& params, int task_id,
                              int group_size, Rng& rng) {
  if (group_size < 2) throw std::invalid_argument("group size must be >= 2");
  TrajectoryGroup group;
  group.task_id = task_id;
  group.items.reserve(static_cast<size_t>(group_size));
  for (int i = 0; i < group_size; ++i) group.items.push_back(rollout(env, params, task_id, rng));
  return group;
}

void inject_advantage_noise(Trajectory& traj, const NoiseModel& noise, Rng& rng) {
  if (noise.sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
  if (noise.sigma == 0.0) return;
  if (!traj.has_advantages()) throw std::logic_error("advantages not populated before noise injection");
  for (double& a : traj.advantage_tokens) a += rng.normal(0.0, noise.sigma);
  traj.advantage_scalar = trajectory_aggregate(traj.advantage_tokens);
}

void inject_advantage_noise(std::vector<TrajectoryGroup>& batch, const NoiseModel& noise,
                            Rng& rng) {
  for (auto& group : batch)
    for (auto& traj : group.items) inject_advantage_noise(traj, noise, rng);
}

double optimal_expected_reward(const Env& env) {
  if (const auto* bandit = std::get_if<GroupedBandit>(&env)) {
    double acc = 0.0;
    for (const auto& row : bandit->reward_table)
      acc += *std::max_element(row.begin(), row.end());
    return acc / static_cast<double>(bandit->reward_table.size());
  }
  // A deterministic-correct policy exists for every chain task.
  return 1.0;
}

double expected_policy_reward(const Env& env, const PolicyParams& params) {
  if (const auto* bandit = std::get_if<GroupedBandit>(&env)) {
    double acc = 0.0;
    for (int c = 0; c < bandit->num_contexts(); ++c) {
      std::vector<double> probs = action_probabilities(params, c);
      for (int a = 0; a < bandit->num_actions(); ++a)
        acc += probs[static_cast<size_t>(a)] * bandit->reward_table[static_cast<size_t>(c)][static_cast<size_t>(a)];
    }
    return acc / bandit->num_contexts();
  }
  const auto& chain = std::get<ChainTask>(env);
  double acc = 0.0;
  for (int c = 0; c < chain.tasks; ++c) {
    double success = 1.0;
    for (int t = 0; t < chain.chain_length; ++t) {
      std::vector<double> probs = action_probabilities(params, chain.context_id(c, t));
      success *= probs[static_cast<size_t>(chain.correct_action(c, t))];
    }
    acc += success;
  }
  return acc / chain.tasks;
}

}  // namespace capolab
