#pragma once

#include <cstdint>
#include <vector>

#include "capolab/advantage.hpp"
#include "capolab/objective.hpp"

namespace capolab {

// Streaming per-coordinate moments (Welford) with Chan's parallel merge, so
// sharded Monte Carlo runs reduce to the same statistics as one flat run.
// Long-double internals keep the moment identities tight at n ~ 1e6.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  MomentAccumulator(int rows, int cols);

  void add(const Matrix& sample);
  void merge(const MomentAccumulator& other);

  long long count() const { return count_; }
  Matrix mean() const;
  Matrix variance() const;  // population, per coordinate
  double variance_trace() const;

 private:
  long long count_ = 0;
  int rows_ = 0, cols_ = 0;
  std::vector<long double> mean_;
  std::vector<long double> m2_;
};

// Bias/variance/MSE of a Monte Carlo gradient estimator against the exact
// gradient, plus the positive-part second-moment ratio of the sampled
// advantages.
struct GradientStats {
  Matrix mean_gradient;
  double bias_norm = 0.0;       // || E[g_hat] - g_true ||_2
  double variance_trace = 0.0;  // sum of per-coordinate population variances
  double mse = 0.0;             // E || g_hat - g_true ||^2, accumulated directly
  double ratio_halving = 0.0;   // E[A^2 1{A>0}] / E[A^2] over sampled advantages
  long long samples = 0;
};

// Stochastic-approximation decay alpha_t = alpha0 / (1 + t / tau): the sum
// diverges, the sum of squares converges.
struct StepSchedule {
  double alpha0 = 0.5;
  double tau = 50.0;
};

double step_size(const StepSchedule& schedule, int step);

enum class LabEstimator { Phase1, Phase2 };

// Exact per-state-action advantage A(s, a) = E[r | s, a] - E[r | s] under
// `params`, with the per-context baseline E[r | s]. For the chain, E[r|s,a]
// marginalizes prefix/suffix correctness under the policy.
double exact_advantage(const Env& env, const PolicyParams& params, int context, int action);

// Exact target gradient g = E_{s ~ uniform, a ~ pi}[grad log pi(a|s) * A(s,a)]
// by full enumeration. Throws std::invalid_argument when
// contexts * actions * horizon exceeds 1e6 (no silent approximation).
Matrix true_gradient(const Env& env, const PolicyParams& params);

struct LabConfig {
  LabEstimator estimator = LabEstimator::Phase2;
  double sigma = 0.0;  // stddev of Gaussian advantage noise
  long long samples = 10000;
  int workers = 1;     // shards merged via MomentAccumulator::merge
  uint64_t seed = 0;
};

// Monte Carlo study of the single-sample gradient estimator: each sample
// draws s uniformly, a ~ pi(.|s), perturbs the exact advantage with
// N(0, sigma^2), applies the phase-1 gate 1{A_hat >= 0} when configured, and
// scores g_hat = grad log pi(a|s) * A_hat. Bias/variance/MSE are measured
// against true_gradient(env, params). Deterministic given cfg (worker shards
// use seeds derived from cfg.seed and merge in fixed order).
GradientStats mc_gradient_stats(const Env& env, const PolicyParams& params,
                                const LabConfig& cfg);

// Monte Carlo estimate of the imitation gate's filtered-out mass
// E[grad log pi * A_hat * 1{A_hat <= 0}], sampled exactly like
// mc_gradient_stats. Equals phase2 mean - phase1 mean in expectation.
Matrix filtered_estimator_bias(const Env& env, const PolicyParams& params, double sigma,
                               long long samples, uint64_t seed);

struct HalvingCheck {
  double ratio = 0.0;           // E[A^2 1{A>0}] / E[A^2]
  double expected = 0.5;        // exact value for a centered Gaussian
  bool pass = false;
  double sample_mean = 0.0;
  double sample_variance = 0.0;  // population; sample_second - sample_mean^2
  double sample_second = 0.0;    // mean of A^2
};

// Positive-part second-moment ratio of n draws from N(mean, sigma^2),
// checked against the closed form; at mean = 0 the exact ratio is 1/2.
HalvingCheck variance_halving_check(double sigma, long long samples, uint64_t seed,
                                    double tol = 0.02, double mean = 0.0);

}  // namespace capolab
