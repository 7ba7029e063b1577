#include "capolab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace capolab {

namespace {

void check_context(const PolicyParams& params, int context) {
  if (context < 0 || context >= params.num_contexts())
    throw std::out_of_range("context index " + std::to_string(context) + " out of range");
}

void check_action(const PolicyParams& params, int action) {
  if (action < 0 || action >= params.num_actions())
    throw std::out_of_range("action index " + std::to_string(action) + " out of range");
}

// log sum_k exp(row[k]), stabilized by the row max.
double log_sum_exp(const PolicyParams& params, int context) {
  const int k = params.num_actions();
  double mx = params.logits(context, 0);
  for (int a = 1; a < k; ++a) mx = std::max(mx, params.logits(context, a));
  double s = 0.0;
  for (int a = 0; a < k; ++a) s += std::exp(params.logits(context, a) - mx);
  return mx + std::log(s);
}

}  // namespace

std::vector<double> action_probabilities(const PolicyParams& params, int context) {
  check_context(params, context);
  const int k = params.num_actions();
  const double lse = log_sum_exp(params, context);
  std::vector<double> probs(static_cast<size_t>(k));
  for (int a = 0; a < k; ++a) probs[static_cast<size_t>(a)] = std::exp(params.logits(context, a) - lse);
  return probs;
}

double log_prob(const PolicyParams& params, int context, int action) {
  check_context(params, context);
  check_action(params, action);
  double lp = params.logits(context, action) - log_sum_exp(params, context);
  return std::min(lp, 0.0);
}

std::pair<int, double> sample_action(const PolicyParams& params, int context, Rng& rng) {
  std::vector<double> probs = action_probabilities(params, context);
  int action = rng.categorical(probs);
  return {action, log_prob(params, context, action)};
}

Matrix logprob_gradient(const PolicyParams& params, int context, int action) {
  check_action(params, action);
  Matrix grad(params.num_contexts(), params.num_actions(), 0.0);
  std::vector<double> probs = action_probabilities(params, context);
  for (int a = 0; a < params.num_actions(); ++a) grad(context, a) = -probs[static_cast<size_t>(a)];
  grad(context, action) += 1.0;
  return grad;
}

void accumulate_logprob_gradient(const PolicyParams& params, int context, int action,
                                 double coeff, Matrix& into) {
  check_action(params, action);
  std::vector<double> probs = action_probabilities(params, context);
  for (int a = 0; a < params.num_actions(); ++a)
    into(context, a) -= coeff * probs[static_cast<size_t>(a)];
  into(context, action) += coeff;
}

double policy_entropy(const PolicyParams& params, int context) {
  check_context(params, context);
  const double lse = log_sum_exp(params, context);
  double h = 0.0;
  for (int a = 0; a < params.num_actions(); ++a) {
    const double lp = params.logits(context, a) - lse;
    h -= std::exp(lp) * lp;  // p -> 0 limit handled: exp(lp)*lp -> 0
  }
  return std::max(h, 0.0);
}

double mean_policy_entropy(const PolicyParams& params) {
  double acc = 0.0;
  for (int c = 0; c < params.num_contexts(); ++c) acc += policy_entropy(params, c);
  return acc / params.num_contexts();
}

double kl_to_reference(const PolicyParams& params, const ReferencePolicy& ref,
                       std::span<const int> contexts) {
  const PolicyParams& rp = ref.params();
  if (!params.logits.same_shape(rp.logits))
    throw std::invalid_argument("policy/reference shape mismatch");
  if (contexts.empty()) return 0.0;
  double acc = 0.0;
  for (int c : contexts) {
    check_context(params, c);
    const double lse_p = log_sum_exp(params, c);
    const double lse_q = log_sum_exp(rp, c);
    double kl = 0.0;
    for (int a = 0; a < params.num_actions(); ++a) {
      const double lp = params.logits(c, a) - lse_p;
      const double lq = rp.logits(c, a) - lse_q;
      kl += std::exp(lp) * (lp - lq);
    }
    acc += std::max(kl, 0.0);
  }
  return acc / static_cast<double>(contexts.size());
}

Matrix kl_gradient(const PolicyParams& params, const ReferencePolicy& ref,
                   std::span<const int> contexts) {
  const PolicyParams& rp = ref.params();
  if (!params.logits.same_shape(rp.logits))
    throw std::invalid_argument("policy/reference shape mismatch");
  Matrix grad(params.num_contexts(), params.num_actions(), 0.0);
  if (contexts.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(contexts.size());
  for (int c : contexts) {
    check_context(params, c);
    const double lse_p = log_sum_exp(params, c);
    const double lse_q = log_sum_exp(rp, c);
    // KL_c = sum_k p_k (logp_k - logq_k); dKL_c/dz_k = p_k ((logp_k - logq_k) - KL_c)
    double kl = 0.0;
    for (int a = 0; a < params.num_actions(); ++a) {
      const double lp = params.logits(c, a) - lse_p;
      const double lq = rp.logits(c, a) - lse_q;
      kl += std::exp(lp) * (lp - lq);
    }
    for (int a = 0; a < params.num_actions(); ++a) {
      const double lp = params.logits(c, a) - lse_p;
      const double lq = rp.logits(c, a) - lse_q;
      grad(c, a) += scale * std::exp(lp) * ((lp - lq) - kl);
    }
  }
  return grad;
}

void save_checkpoint(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << "contexts=" << params.num_contexts() << " actions=" << params.num_actions() << "\n";
  char buf[64];
  for (int c = 0; c < params.num_contexts(); ++c) {
    for (int a = 0; a < params.num_actions(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", params.logits(c, a));
      out << (a ? " " : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty checkpoint: " + path);
  int contexts = 0, actions = 0;
  if (std::sscanf(header.c_str(), "contexts=%d actions=%d", &contexts, &actions) != 2 ||
      contexts <= 0 || actions < 2)
    throw std::runtime_error("bad checkpoint header: " + header);
  PolicyParams params(contexts, actions);
  for (int c = 0; c < contexts; ++c) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint truncated at row " + std::to_string(c));
    std::istringstream row(line);
    for (int a = 0; a < actions; ++a) {
      if (!(row >> params.logits(c, a)))
        throw std::runtime_error("bad checkpoint row " + std::to_string(c));
    }
    double extra;
    if (row >> extra) throw std::runtime_error("trailing values in checkpoint row " + std::to_string(c));
  }
  if (!params.logits.all_finite()) throw std::runtime_error("non-finite logits in checkpoint");
  return params;
}

}  // namespace capolab
