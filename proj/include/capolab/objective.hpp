#pragma once

#include <vector>

#include "capolab/advantage.hpp"
#include "capolab/policy.hpp"

namespace capolab {

struct ClipConfig {
  double epsilon = 0.2;  // ratio clip half-width
  double beta = 0.02;    // KL penalty weight
};

// Value + analytic gradient of one objective evaluation, plus the token/
// trajectory bookkeeping the trainer logs.
struct ObjectiveReport {
  double value = 0.0;        // penalized objective (maximize)
  Matrix gradient;           // d value / d logits
  int num_contributing = 0;  // trajectories that passed the gate
  int num_total = 0;         // trajectories in the batch
  double kl_value = 0.0;     // KL(params || ref) term, before -beta weighting
};

// exp(log pi_new - log pi_old) for one token.
double importance_ratio(double new_logp, double old_logp);

// PPO-style pessimistic token term min(ratio*A, clip(ratio,1-eps,1+eps)*A).
double clipped_term(double ratio, double advantage, double epsilon);

// Derivative of clipped_term w.r.t. new_logp (active-branch subgradient):
// ratio*A when the unclipped branch is active at the min, else 0 (the
// clipped branch is flat in new_logp). Ties take the unclipped branch.
double clipped_term_dlogp(double ratio, double advantage, double epsilon);

// Shared core. Each gated trajectory contributes the mean of its tokens'
// clipped terms; the gated contributions are summed and divided by
// `denom_trajectories` (gating never renormalizes). Subtracts beta * mean KL
// over `kl_contexts`. Exposed for tests; phase1/phase2 are thin wrappers.
ObjectiveReport masked_objective(const std::vector<TrajectoryGroup>& batch,
                                 const std::vector<std::vector<char>>& gate,
                                 const PolicyParams& params, const ReferencePolicy& ref,
                                 const ClipConfig& cfg, int denom_trajectories,
                                 std::span<const int> kl_contexts);

// Imitation phase: only trajectories with scalar advantage >= 0 contribute;
// the average keeps the full batch size in the denominator, so filtering
// shrinks the magnitude rather than renormalizing. KL penalty applies
// unconditionally over every context the batch touched.
ObjectiveReport phase1_objective(const std::vector<TrajectoryGroup>& batch,
                                 const PolicyParams& params, const ReferencePolicy& ref,
                                 const ClipConfig& cfg);

// Discrimination phase: every trajectory contributes regardless of sign.
ObjectiveReport phase2_objective(const std::vector<TrajectoryGroup>& batch,
                                 const PolicyParams& params, const ReferencePolicy& ref,
                                 const ClipConfig& cfg);

struct GradientCheckReport {
  double max_rel_error = 0.0;
  int checked_coords = 0;
  int skipped_coords = 0;  // coordinates near a clip kink
  bool pass = false;
};

// Central finite-difference audit of the phase gradient (phase1 when
// `positive_only`). Coordinates whose context row contains a token ratio
// within max(1e-6, 3*step) of a clip boundary are skipped as kink-adjacent.
GradientCheckReport surrogate_gradient_check(const std::vector<TrajectoryGroup>& batch,
                                             const PolicyParams& params,
                                             const ReferencePolicy& ref, const ClipConfig& cfg,
                                             bool positive_only, double step = 1e-5,
                                             double tol = 1e-4);

}  // namespace capolab
