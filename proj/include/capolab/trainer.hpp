#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "capolab/advantage.hpp"
#include "capolab/lab.hpp"
#include "capolab/objective.hpp"
#include "capolab/schedule.hpp"

namespace capolab {

enum class Curriculum { Capo, None, Static };

Curriculum curriculum_from_string(const std::string& name);  // throws std::invalid_argument
std::string curriculum_to_string(Curriculum c);

struct LearningRate {
  bool decay = false;  // false: constant alpha0; true: alpha0 / (1 + t/tau)
  StepSchedule schedule{0.5, 50.0};
};

struct TrainConfig {
  Env env;
  EstimatorKind algo = EstimatorKind::Grpo;
  Curriculum curriculum = Curriculum::Capo;
  double switch_fraction = 0.2;
  int total_steps = 100;
  int group_size = 16;
  int batch_groups = 1;  // task groups per optimizer step
  int inner_epochs = 1;  // objective/update passes per sampled batch
  ClipConfig clip{};
  GaeConfig gae{};
  double eps_std = 1e-8;
  NoiseModel noise{};
  LearningRate lr{};
  int pass_k = 16;  // static-curriculum difficulty probe
  uint64_t seed = 0;
};

// One row of metrics.csv, one per optimizer step, field order = column order.
struct MetricRecord {
  int step = 0;
  int phase = 2;
  double mean_reward = 0.0;
  double policy_entropy = 0.0;
  double kl_to_ref = 0.0;
  double frac_positive_advantage = 0.0;
  int num_contributing = 0;
  double gradient_norm = 0.0;
  double objective_value = 0.0;
};

struct TrainResult {
  PolicyParams final_params;
  std::vector<MetricRecord> metrics;
  double final_mean_reward = 0.0;      // last metric row's batch mean reward
  double final_entropy = 0.0;          // last metric row's mean policy entropy
  double final_expected_reward = 0.0;  // exact expected_policy_reward at end
};

// Raised when training produces a non-finite objective, gradient, or
// parameter; carries the offending step. The CLI maps it to the
// numeric-failure exit code.
struct TrainAbort : std::runtime_error {
  int step;
  std::vector<MetricRecord> partial_metrics;
  TrainAbort(const std::string& what, int step_no, std::vector<MetricRecord> metrics)
      : std::runtime_error(what), step(step_no), partial_metrics(std::move(metrics)) {}
};

// Deterministic full training loop. Same config + seed => bitwise-identical
// metrics and final parameters. curriculum=none runs the identical code path
// as capo with switch_fraction forced to 0.
TrainResult train(const TrainConfig& cfg);

// Monte Carlo mean total reward under greedy (argmax, lowest-index tie-break)
// action selection; tasks visited round-robin.
double eval_policy(const Env& env, const PolicyParams& params, int episodes, Rng& rng);

struct SweepRow {
  double switch_fraction = 0.0;
  uint64_t seed = 0;
  double final_reward = 0.0;           // last metric row's mean_reward
  double final_entropy = 0.0;          // last metric row's policy_entropy
  double final_expected_reward = 0.0;  // exact expected_policy_reward at end
};

// One full train run per (fraction, seed), fraction-major order, shared env
// and base config.
std::vector<SweepRow> sweep_switch_points(const TrainConfig& cfg,
                                          const std::vector<double>& fractions,
                                          const std::vector<uint64_t>& seeds);

struct CompareRow {
  EstimatorKind algo = EstimatorKind::Grpo;
  Curriculum curriculum = Curriculum::None;
  double final_reward = 0.0;  // median over seeds of final mean_reward
  double delta = 0.0;         // final_reward minus the same algo's `none` row
  double final_expected_reward = 0.0;  // median over seeds of exact expected reward
  double delta_expected = 0.0;         // final_expected_reward minus the `none` row
};

// Cross product of the four estimators with `curricula`, matched seeds per
// cell; medians over seeds. The delta column is relative to curriculum=none,
// which must be part of `curricula`.
std::vector<CompareRow> compare_algorithms(const TrainConfig& cfg,
                                           const std::vector<Curriculum>& curricula,
                                           const std::vector<uint64_t>& seeds);

// Seed list for multi-seed commands: base first, then streams derived from it.
std::vector<uint64_t> seed_list(uint64_t base, int count);

void write_metrics_csv(const std::vector<MetricRecord>& metrics, const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path);

struct LabRow {
  std::string estimator;
  double sigma = 0.0;
  long long n = 0;
  double bias_norm = 0.0;
  double variance_trace = 0.0;
  double mse = 0.0;
  double ratio_halving = 0.0;
};

void write_lab_csv(const std::vector<LabRow>& rows, const std::string& path);

}  // namespace capolab
