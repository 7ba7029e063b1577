#include "capolab/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace capolab {

double importance_ratio(double new_logp, double old_logp) {
  return std::exp(new_logp - old_logp);
}

double clipped_term(double rho, double advantage, double epsilon) {
  const double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(rho * advantage, clipped * advantage);
}

double clipped_term_dlogp(double rho, double advantage, double epsilon) {
  const double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
  const double unclipped_value = rho * advantage;
  // Unclipped branch active at the min (ties included): d(rho*A)/dlogp = rho*A.
  // Clipped branch is constant in the parameters.
  if (unclipped_value <= clipped * advantage) return unclipped_value;
  return 0.0;
}

namespace {

std::vector<int> visited_contexts(const std::vector<TrajectoryGroup>& batch) {
  std::vector<int> contexts;
  for (const auto& group : batch)
    for (const auto& traj : group.items)
      contexts.insert(contexts.end(), traj.context_ids.begin(), traj.context_ids.end());
  std::sort(contexts.begin(), contexts.end());
  contexts.erase(std::unique(contexts.begin(), contexts.end()), contexts.end());
  return contexts;
}

int batch_size(const std::vector<TrajectoryGroup>& batch) {
  int n = 0;
  for (const auto& group : batch) n += group.size();
  return n;
}

void require_ready(const std::vector<TrajectoryGroup>& batch) {
  if (batch.empty() || batch_size(batch) == 0)
    throw std::invalid_argument("objective needs a nonempty batch");
  for (const auto& group : batch)
    for (const auto& traj : group.items)
      if (!traj.has_advantages())
        throw std::logic_error("objective needs advantages populated on every trajectory");
}

}  // namespace

ObjectiveReport masked_objective(const std::vector<TrajectoryGroup>& batch,
                                 const std::vector<std::vector<char>>& gate,
                                 const PolicyParams& params, const ReferencePolicy& ref,
                                 const ClipConfig& cfg, int denom_trajectories,
                                 std::span<const int> kl_contexts) {
  require_ready(batch);
  if (gate.size() != batch.size()) throw std::invalid_argument("gate/batch group count mismatch");
  if (denom_trajectories <= 0) throw std::invalid_argument("denominator must be positive");

  ObjectiveReport report;
  report.gradient = Matrix(params.num_contexts(), params.num_actions(), 0.0);
  report.num_total = batch_size(batch);

  const double denom = static_cast<double>(denom_trajectories);
  for (size_t g = 0; g < batch.size(); ++g) {
    const auto& group = batch[g];
    if (gate[g].size() != group.items.size())
      throw std::invalid_argument("gate/group size mismatch");
    for (size_t i = 0; i < group.items.size(); ++i) {
      if (!gate[g][i]) continue;
      ++report.num_contributing;
      const auto& traj = group.items[i];
      const double token_scale = 1.0 / (denom * traj.length());
      for (int t = 0; t < traj.length(); ++t) {
        const auto ti = static_cast<size_t>(t);
        const int ctx = traj.context_ids[ti];
        const int act = traj.actions[ti];
        const double new_logp = log_prob(params, ctx, act);
        const double rho = importance_ratio(new_logp, traj.behavior_logps[ti]);
        const double adv = traj.advantage_tokens[ti];
        report.value += token_scale * clipped_term(rho, adv, cfg.epsilon);
        const double coeff = token_scale * clipped_term_dlogp(rho, adv, cfg.epsilon);
        if (coeff != 0.0) accumulate_logprob_gradient(params, ctx, act, coeff, report.gradient);
      }
    }
  }

  if (cfg.beta != 0.0) {
    report.kl_value = kl_to_reference(params, ref, kl_contexts);
    report.value -= cfg.beta * report.kl_value;
    Matrix klg = kl_gradient(params, ref, kl_contexts);
    report.gradient.add_scaled(klg, -cfg.beta);
  }
  return report;
}

namespace {

ObjectiveReport phase_objective(const std::vector<TrajectoryGroup>& batch,
                                const PolicyParams& params, const ReferencePolicy& ref,
                                const ClipConfig& cfg, bool positive_only) {
  require_ready(batch);
  std::vector<std::vector<char>> gate;
  gate.reserve(batch.size());
  for (const auto& group : batch) {
    std::vector<char> row;
    row.reserve(group.items.size());
    for (const auto& traj : group.items)
      row.push_back(static_cast<char>(!positive_only || traj.advantage_scalar >= 0.0));
    gate.push_back(std::move(row));
  }
  std::vector<int> contexts = visited_contexts(batch);
  return masked_objective(batch, gate, params, ref, cfg, batch_size(batch), contexts);
}

}  // namespace

ObjectiveReport phase1_objective(const std::vector<TrajectoryGroup>& batch,
                                 const PolicyParams& params, const ReferencePolicy& ref,
                                 const ClipConfig& cfg) {
  return phase_objective(batch, params, ref, cfg, /*positive_only=*/true);
}

ObjectiveReport phase2_objective(const std::vector<TrajectoryGroup>& batch,
                                 const PolicyParams& params, const ReferencePolicy& ref,
                                 const ClipConfig& cfg) {
  return phase_objective(batch, params, ref, cfg, /*positive_only=*/false);
}

GradientCheckReport surrogate_gradient_check(const std::vector<TrajectoryGroup>& batch,
                                             const PolicyParams& params,
                                             const ReferencePolicy& ref, const ClipConfig& cfg,
                                             bool positive_only, double step, double tol) {
  if (!(step > 0.0) || step > 1e-3) throw std::invalid_argument("step must be in (0, 1e-3]");
  auto evaluate = [&](const PolicyParams& p) {
    return positive_only ? phase1_objective(batch, p, ref, cfg)
                         : phase2_objective(batch, p, ref, cfg);
  };

  const ObjectiveReport analytic = evaluate(params);

  // A context row is kink-adjacent when any contributing token at that
  // context has its ratio within the exclusion radius of a clip boundary;
  // perturbing any logit of the row can then cross the kink.
  const double radius = std::max(1e-6, 3.0 * step);
  std::vector<char> near_kink(static_cast<size_t>(params.num_contexts()), 0);
  for (const auto& group : batch) {
    for (const auto& traj : group.items) {
      if (positive_only && traj.advantage_scalar < 0.0) continue;
      for (int t = 0; t < traj.length(); ++t) {
        const auto ti = static_cast<size_t>(t);
        const int ctx = traj.context_ids[ti];
        const double rho =
            importance_ratio(log_prob(params, ctx, traj.actions[ti]), traj.behavior_logps[ti]);
        if (std::abs(rho - (1.0 - cfg.epsilon)) < radius ||
            std::abs(rho - (1.0 + cfg.epsilon)) < radius)
          near_kink[static_cast<size_t>(ctx)] = 1;
      }
    }
  }

  GradientCheckReport report;
  PolicyParams probe = params;
  for (int c = 0; c < params.num_contexts(); ++c) {
    if (near_kink[static_cast<size_t>(c)]) {
      report.skipped_coords += params.num_actions();
      continue;
    }
    for (int a = 0; a < params.num_actions(); ++a) {
      const double saved = probe.logits(c, a);
      probe.logits(c, a) = saved + step;
      const double plus = evaluate(probe).value;
      probe.logits(c, a) = saved - step;
      const double minus = evaluate(probe).value;
      probe.logits(c, a) = saved;
      const double fd = (plus - minus) / (2.0 * step);
      const double an = analytic.gradient(c, a);
      const double scale = std::max({std::abs(an), std::abs(fd), 1e-3});
      report.max_rel_error = std::max(report.max_rel_error, std::abs(an - fd) / scale);
      ++report.checked_coords;
    }
  }
  report.pass = report.checked_coords > 0 && report.max_rel_error <= tol;
  return report;
}

}  // namespace capolab
