#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capolab/matrix.hpp"
#include "capolab/rng.hpp"

namespace capolab {

// Tabular contextual softmax policy: one logit row per context. The logit
// table is the only trainable object in the library.
struct PolicyParams {
  Matrix logits;  // num_contexts x num_actions

  PolicyParams() = default;
  PolicyParams(int contexts, int actions, double fill = 0.0) : logits(contexts, actions, fill) {}

  int num_contexts() const { return logits.rows; }
  int num_actions() const { return logits.cols; }
};

// Frozen snapshot of the policy taken at training start; the KL anchor.
class ReferencePolicy {
 public:
  explicit ReferencePolicy(const PolicyParams& params) : params_(params) {}
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
};

// One sampled episode. Advantage fields stay empty until an estimator runs.
struct Trajectory {
  std::vector<int> context_ids;
  std::vector<int> actions;
  std::vector<double> behavior_logps;  // log pi_old at sampling time
  std::vector<double> rewards;
  std::vector<double> advantage_tokens;
  double advantage_scalar = 0.0;

  int length() const { return static_cast<int>(actions.size()); }
  bool has_advantages() const { return !advantage_tokens.empty(); }
  double total_reward() const {
    double acc = 0.0;
    for (double r : rewards) acc += r;
    return acc;
  }
};

// Softmax probabilities of one context row, log-sum-exp stabilized.
std::vector<double> action_probabilities(const PolicyParams& params, int context);

// log softmax(logits[context])[action]; always <= 0.
double log_prob(const PolicyParams& params, int context, int action);

// Draw an action from the context's softmax distribution. Consumes exactly
// one uniform from rng. Returns (action, log_prob of that action).
std::pair<int, double> sample_action(const PolicyParams& params, int context, Rng& rng);

// d log pi(action|context) / d logits: row `context` is onehot(action) - probs,
// all other rows zero.
Matrix logprob_gradient(const PolicyParams& params, int context, int action);

// Adds coeff * d log pi(action|context)/d logits into `into` without
// materializing the sparse full-size gradient.
void accumulate_logprob_gradient(const PolicyParams& params, int context, int action,
                                 double coeff, Matrix& into);

// Shannon entropy of one context's distribution, in [0, ln K].
double policy_entropy(const PolicyParams& params, int context);

// Mean entropy over all contexts (training-dynamics metric).
double mean_policy_entropy(const PolicyParams& params);

// Mean over `contexts` of the exact categorical KL(pi_params || pi_ref).
double kl_to_reference(const PolicyParams& params, const ReferencePolicy& ref,
                       std::span<const int> contexts);

// Gradient of kl_to_reference w.r.t. params.logits.
Matrix kl_gradient(const PolicyParams& params, const ReferencePolicy& ref,
                   std::span<const int> contexts);

// Plain-text checkpoint: header "contexts=<n> actions=<K>", then one
// whitespace-separated logit row per context at full double precision.
void save_checkpoint(const PolicyParams& params, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace capolab
