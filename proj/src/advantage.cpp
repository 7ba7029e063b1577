#include "capolab/advantage.hpp"

#include <cmath>
#include <stdexcept>

namespace capolab {

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "grpo") return EstimatorKind::Grpo;
  if (name == "ppo") return EstimatorKind::Ppo;
  if (name == "rloo") return EstimatorKind::Rloo;
  if (name == "reinforcepp") return EstimatorKind::Reinforcepp;
  throw std::invalid_argument("unknown algo '" + name + "' (expected grpo|ppo|rloo|reinforcepp)");
}

std::string estimator_to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Grpo: return "grpo";
    case EstimatorKind::Ppo: return "ppo";
    case EstimatorKind::Rloo: return "rloo";
    case EstimatorKind::Reinforcepp: return "reinforcepp";
  }
  return "?";
}

double trajectory_aggregate(const std::vector<double>& token_values) {
  if (token_values.empty()) throw std::invalid_argument("empty token sequence has no aggregate");
  double acc = 0.0;
  for (double v : token_values) acc += v;
  return acc / static_cast<double>(token_values.size());
}

std::vector<double> group_normalized_values(const std::vector<double>& rewards, double eps_std) {
  const size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("group normalization needs >= 2 rewards");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n);
  std::vector<double> out(n, 0.0);
  if (var == 0.0) return out;  // zero-variance group: exactly zero advantages
  const double denom = std::sqrt(var) + eps_std;
  for (size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / denom;
  return out;
}

std::vector<double> leave_one_out_values(const std::vector<double>& rewards) {
  const size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("leave-one-out baseline needs >= 2 rewards");
  double total = 0.0;
  for (double r : rewards) total += r;
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = rewards[i] - (total - rewards[i]) / static_cast<double>(n - 1);
  return out;
}

namespace {

std::vector<double> group_rewards(const TrajectoryGroup& group) {
  std::vector<double> rewards;
  rewards.reserve(group.items.size());
  for (const auto& traj : group.items) rewards.push_back(traj.total_reward());
  return rewards;
}

void broadcast_scalar(Trajectory& traj, double advantage) {
  traj.advantage_tokens.assign(static_cast<size_t>(traj.length()), advantage);
  traj.advantage_scalar = advantage;
}

}  // namespace

void grpo_advantage(TrajectoryGroup& group, double eps_std) {
  std::vector<double> adv = group_normalized_values(group_rewards(group), eps_std);
  for (size_t i = 0; i < adv.size(); ++i) broadcast_scalar(group.items[i], adv[i]);
}

void rloo_advantage(TrajectoryGroup& group) {
  std::vector<double> adv = leave_one_out_values(group_rewards(group));
  for (size_t i = 0; i < adv.size(); ++i) broadcast_scalar(group.items[i], adv[i]);
}

void reinforcepp_advantage(std::vector<TrajectoryGroup>& batch, double eps_std) {
  std::vector<double> rewards;
  for (const auto& group : batch)
    for (const auto& traj : group.items) rewards.push_back(traj.total_reward());
  std::vector<double> adv = group_normalized_values(rewards, eps_std);
  size_t i = 0;
  for (auto& group : batch)
    for (auto& traj : group.items) broadcast_scalar(traj, adv[i++]);
}

void gae_advantage(Trajectory& traj, const ValueTable& values, const GaeConfig& cfg) {
  const int t_len = traj.length();
  auto value_at = [&](int context) {
    if (context < 0 || static_cast<size_t>(context) >= values.values.size())
      throw std::out_of_range("value table missing context " + std::to_string(context));
    return values.value(context);
  };
  traj.advantage_tokens.assign(static_cast<size_t>(t_len), 0.0);
  double next_adv = 0.0;  // A_T = 0: terminal bootstrap
  for (int t = t_len - 1; t >= 0; --t) {
    const double v_t = value_at(traj.context_ids[static_cast<size_t>(t)]);
    const double v_next = (t + 1 < t_len) ? value_at(traj.context_ids[static_cast<size_t>(t + 1)]) : 0.0;
    const double delta = traj.rewards[static_cast<size_t>(t)] + cfg.gamma * v_next - v_t;
    next_adv = delta + cfg.gamma * cfg.lambda * next_adv;
    traj.advantage_tokens[static_cast<size_t>(t)] = next_adv;
  }
  traj.advantage_scalar = trajectory_aggregate(traj.advantage_tokens);
}

ValueTable fit_value_table(const std::vector<TrajectoryGroup>& batch, int num_contexts,
                           double gamma) {
  std::vector<double> sums(static_cast<size_t>(num_contexts), 0.0);
  std::vector<long long> visits(static_cast<size_t>(num_contexts), 0);
  for (const auto& group : batch) {
    for (const auto& traj : group.items) {
      double ret = 0.0;  // discounted return-to-go, built backwards
      for (int t = traj.length() - 1; t >= 0; --t) {
        ret = traj.rewards[static_cast<size_t>(t)] + gamma * ret;
        const auto c = static_cast<size_t>(traj.context_ids[static_cast<size_t>(t)]);
        if (c >= sums.size()) throw std::out_of_range("trajectory context exceeds table size");
        sums[c] += ret;
        visits[c] += 1;
      }
    }
  }
  ValueTable table;
  table.values.assign(static_cast<size_t>(num_contexts), 0.0);
  for (size_t c = 0; c < sums.size(); ++c)
    if (visits[c] > 0) table.values[c] = sums[c] / static_cast<double>(visits[c]);
  return table;
}

void apply_advantages(std::vector<TrajectoryGroup>& batch, EstimatorKind kind,
                      int num_contexts, const GaeConfig& gae, double eps_std) {
  switch (kind) {
    case EstimatorKind::Grpo:
      for (auto& group : batch) grpo_advantage(group, eps_std);
      return;
    case EstimatorKind::Rloo:
      for (auto& group : batch) rloo_advantage(group);
      return;
    case EstimatorKind::Reinforcepp:
      reinforcepp_advantage(batch, eps_std);
      return;
    case EstimatorKind::Ppo: {
      ValueTable values = fit_value_table(batch, num_contexts, gae.gamma);
      for (auto& group : batch)
        for (auto& traj : group.items) gae_advantage(traj, values, gae);
      return;
    }
  }
}

AdvantageProfile summarize_advantages(const std::vector<TrajectoryGroup>& batch) {
  AdvantageProfile profile;
  double sum = 0.0, sumsq = 0.0;
  int nonneg = 0;
  for (const auto& group : batch) {
    for (const auto& traj : group.items) {
      const double a = traj.advantage_scalar;
      sum += a;
      sumsq += a * a;
      if (a >= 0.0) ++nonneg;
      ++profile.count;
    }
  }
  if (profile.count == 0) return profile;
  profile.mean = sum / profile.count;
  const double var = std::max(0.0, sumsq / profile.count - profile.mean * profile.mean);
  profile.stddev = std::sqrt(var);
  profile.frac_positive = static_cast<double>(nonneg) / profile.count;
  return profile;
}

}  // namespace capolab
