#pragma once

#include <string>
#include <vector>

#include "capolab/env.hpp"

namespace capolab {

enum class EstimatorKind { Grpo, Ppo, Rloo, Reinforcepp };

EstimatorKind estimator_from_string(const std::string& name);  // throws std::invalid_argument
std::string estimator_to_string(EstimatorKind kind);

// Dense state-value table indexed by policy context id (the chain flattens
// (task, step) into one context per step, so this covers per-step values).
struct ValueTable {
  std::vector<double> values;

  double value(int context) const { return values[static_cast<size_t>(context)]; }
};

struct GaeConfig {
  double gamma = 1.0;
  double lambda = 1.0;
};

// Scalar trajectory advantage from token values: the arithmetic mean.
// Preserves the sign of broadcast (constant-per-token) estimators exactly.
double trajectory_aggregate(const std::vector<double>& token_values);

// --- reward-vector kernels (the arithmetic, reused by the group ops) ---

// (r_i - mean(r)) / (std_pop(r) + eps_std); all-zero when std_pop(r) == 0.
std::vector<double> group_normalized_values(const std::vector<double>& rewards, double eps_std);

// r_i - mean of the other entries. Sums to 0 exactly in exact arithmetic.
std::vector<double> leave_one_out_values(const std::vector<double>& rewards);

// --- estimator ops (fill advantage fields of trajectories in place) ---

// Group-relative advantage: one scalar per trajectory from its total reward,
// normalized within the group, broadcast to every token. A zero-variance
// group gets exactly 0 for all members.
void grpo_advantage(TrajectoryGroup& group, double eps_std = 1e-8);

// Leave-one-out baseline: A_i = r_i - mean_{j != i}(r_j), broadcast per
// token. Group advantage sum is exactly 0.
void rloo_advantage(TrajectoryGroup& group);

// Global-batch standardization: A_i = (r_i - mean_B) / (std_pop_B + eps_std)
// pooled over every trajectory in the batch, ignoring group boundaries.
void reinforcepp_advantage(std::vector<TrajectoryGroup>& batch, double eps_std = 1e-8);

// Per-token advantage over one trajectory: backward recursion
//   delta_t = r_t + gamma * V(s_{t+1}) - V(s_t),  A_t = delta_t + gamma*lambda*A_{t+1},
// with the terminal bootstrap V(s_T) = 0. Scalar advantage is the token mean.
// Throws std::out_of_range if a visited context has no value entry.
void gae_advantage(Trajectory& traj, const ValueTable& values, const GaeConfig& cfg);

// Monte Carlo value fit: V(c) = mean over all visits of context c of the
// empirical discounted return-to-go from that visit. Unvisited contexts get 0.
ValueTable fit_value_table(const std::vector<TrajectoryGroup>& batch, int num_contexts,
                           double gamma);

// Dispatch the chosen estimator over a whole batch. Ppo fits a value table
// from the same batch, then runs the per-trajectory recursion.
void apply_advantages(std::vector<TrajectoryGroup>& batch, EstimatorKind kind,
                      int num_contexts, const GaeConfig& gae, double eps_std = 1e-8);

// Summary of one batch's scalar advantages after estimation.
struct AdvantageProfile {
  double mean = 0.0;
  double stddev = 0.0;         // population
  double frac_positive = 0.0;  // fraction with scalar advantage >= 0
  int count = 0;
};

AdvantageProfile summarize_advantages(const std::vector<TrajectoryGroup>& batch);

}  // namespace capolab
