#include "capolab/schedule.hpp"

#include <algorithm>
#include <stdexcept>

namespace capolab {

Phase current_phase(const PhaseSchedule& schedule, int step) {
  if (step < 0 || step >= schedule.total_steps)
    throw std::out_of_range("step " + std::to_string(step) + " outside [0, total_steps)");
  return step < schedule.switch_step() ? Phase::Imitation : Phase::Discrimination;
}

std::vector<char> advantage_mask(Phase phase, const std::vector<double>& scalar_advantages) {
  std::vector<char> mask(scalar_advantages.size(), 1);
  if (phase == Phase::Imitation)
    for (size_t i = 0; i < scalar_advantages.size(); ++i)
      mask[i] = static_cast<char>(scalar_advantages[i] >= 0.0);
  return mask;
}

std::vector<std::vector<char>> advantage_mask(const std::vector<TrajectoryGroup>& batch,
                                              Phase phase) {
  std::vector<std::vector<char>> mask;
  mask.reserve(batch.size());
  for (const auto& group : batch) {
    std::vector<double> advantages;
    advantages.reserve(group.items.size());
    for (const auto& traj : group.items) advantages.push_back(traj.advantage_scalar);
    mask.push_back(advantage_mask(phase, advantages));
  }
  return mask;
}

DifficultyEstimate estimate_difficulty(const Env& env, const PolicyParams& params, int task_id,
                                       int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("difficulty probe needs k >= 1");
  DifficultyEstimate estimate;
  estimate.task_id = task_id;
  estimate.k = k;
  int solved = 0;
  for (int i = 0; i < k; ++i)
    if (rollout(env, params, task_id, rng).total_reward() >= 0.5) ++solved;
  estimate.pass_rate = static_cast<double>(solved) / k;
  return estimate;
}

std::vector<int> static_curriculum_order(const std::vector<DifficultyEstimate>& estimates) {
  if (estimates.empty()) throw std::invalid_argument("curriculum ordering needs estimates");
  std::vector<DifficultyEstimate> sorted = estimates;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.pass_rate != b.pass_rate) return a.pass_rate > b.pass_rate;
    return a.task_id < b.task_id;
  });
  std::vector<int> order;
  order.reserve(sorted.size());
  for (const auto& e : sorted) order.push_back(e.task_id);
  return order;
}

std::vector<int> static_curriculum_order(const Env& env, const PolicyParams& params, int k,
                                         Rng& rng) {
  std::vector<DifficultyEstimate> estimates;
  const int tasks = env_num_tasks(env);
  estimates.reserve(static_cast<size_t>(tasks));
  for (int task = 0; task < tasks; ++task)
    estimates.push_back(estimate_difficulty(env, params, task, k, rng));
  return static_curriculum_order(estimates);
}

int static_unlocked_count(int num_tasks, int step, int total_steps) {
  if (num_tasks < 1 || total_steps < 1) throw std::invalid_argument("bad curriculum sizes");
  const long long grown = 1 + static_cast<long long>(step) * num_tasks / total_steps;
  return static_cast<int>(std::min<long long>(num_tasks, std::max<long long>(1, grown)));
}

}  // namespace capolab
