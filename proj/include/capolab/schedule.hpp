#pragma once

#include <vector>

#include "capolab/env.hpp"

namespace capolab {

enum class Phase { Imitation = 1, Discrimination = 2 };

// Two-phase switch: imitation for steps [0, switch_step), discrimination
// from switch_step on, where switch_step = floor(switch_fraction * total_steps).
struct PhaseSchedule {
  double switch_fraction = 0.2;
  int total_steps = 0;

  int switch_step() const { return static_cast<int>(switch_fraction * total_steps); }
};

// Throws std::out_of_range unless 0 <= step < total_steps.
Phase current_phase(const PhaseSchedule& schedule, int step);

// Per-trajectory inclusion mask: imitation admits scalar advantage >= 0,
// discrimination admits everything.
std::vector<char> advantage_mask(Phase phase, const std::vector<double>& scalar_advantages);

// Batch-shaped mask (one vector<char> per group), from each trajectory's
// stored scalar advantage.
std::vector<std::vector<char>> advantage_mask(const std::vector<TrajectoryGroup>& batch,
                                              Phase phase);

// pass@k difficulty probe for one task: k sampled rollouts, pass_rate =
// fraction attaining total reward 1.
struct DifficultyEstimate {
  int task_id = 0;
  int k = 0;
  double pass_rate = 0.0;
};

DifficultyEstimate estimate_difficulty(const Env& env, const PolicyParams& params, int task_id,
                                       int k, Rng& rng);

// Easy-to-hard ordering: task ids sorted by descending pass_rate, ties by
// ascending task id.
std::vector<int> static_curriculum_order(const std::vector<DifficultyEstimate>& estimates);

// Probe every task with pass@k, then sort.
std::vector<int> static_curriculum_order(const Env& env, const PolicyParams& params, int k,
                                         Rng& rng);

// Size of the unlocked prefix of the static ordering at `step`: grows
// linearly from 1 task at step 0 to all tasks by the final step.
int static_unlocked_count(int num_tasks, int step, int total_steps);

}  // namespace capolab
