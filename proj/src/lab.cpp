#include "capolab/lab.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace capolab {

MomentAccumulator::MomentAccumulator(int rows, int cols)
    : rows_(rows),
      cols_(cols),
      mean_(static_cast<size_t>(rows) * cols, 0.0L),
      m2_(static_cast<size_t>(rows) * cols, 0.0L) {}

void MomentAccumulator::add(const Matrix& sample) {
  if (sample.rows != rows_ || sample.cols != cols_)
    throw std::invalid_argument("sample shape mismatch in moment accumulator");
  ++count_;
  const auto n = static_cast<long double>(count_);
  for (size_t i = 0; i < mean_.size(); ++i) {
    const long double x = sample.data[i];
    const long double delta = x - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (x - mean_[i]);
  }
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_)
    throw std::invalid_argument("shape mismatch in moment merge");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const auto n1 = static_cast<long double>(count_);
  const auto n2 = static_cast<long double>(other.count_);
  const long double n = n1 + n2;
  for (size_t i = 0; i < mean_.size(); ++i) {
    const long double delta = other.mean_[i] - mean_[i];
    mean_[i] += delta * (n2 / n);
    m2_[i] += other.m2_[i] + delta * delta * (n1 * n2 / n);
  }
  count_ += other.count_;
}

Matrix MomentAccumulator::mean() const {
  Matrix out(rows_, cols_, 0.0);
  for (size_t i = 0; i < mean_.size(); ++i) out.data[i] = static_cast<double>(mean_[i]);
  return out;
}

Matrix MomentAccumulator::variance() const {
  Matrix out(rows_, cols_, 0.0);
  if (count_ > 0)
    for (size_t i = 0; i < m2_.size(); ++i)
      out.data[i] = static_cast<double>(m2_[i] / static_cast<long double>(count_));
  return out;
}

double MomentAccumulator::variance_trace() const {
  if (count_ == 0) return 0.0;
  long double acc = 0.0L;
  for (long double v : m2_) acc += v;
  return static_cast<double>(acc / static_cast<long double>(count_));
}

double step_size(const StepSchedule& schedule, int step) {
  if (step < 0) throw std::invalid_argument("step must be >= 0");
  return schedule.alpha0 / (1.0 + static_cast<double>(step) / schedule.tau);
}

namespace {

// Expected observed reward of (context, action): the env's emitted reward
// including any label noise, so the lab analyzes the environment as sampled.
// q_out[a] = E[r | c, a], v_out = E[r | c] under the policy.
void state_action_values(const Env& env, const PolicyParams& params, int context,
                         std::vector<double>& q_out, double& v_out) {
  const std::vector<double> probs = action_probabilities(params, context);
  const int k = env_num_actions(env);
  q_out.assign(static_cast<size_t>(k), 0.0);
  if (const auto* bandit = std::get_if<GroupedBandit>(&env)) {
    for (int a = 0; a < k; ++a)
      q_out[static_cast<size_t>(a)] = bandit->reward_table[static_cast<size_t>(context)][static_cast<size_t>(a)];
  } else {
    const auto& chain = std::get<ChainTask>(env);
    const int task = context / chain.chain_length;
    const int step = context % chain.chain_length;
    double alive = 1.0, suffix = 1.0;
    for (int u = 0; u < step; ++u) {
      const std::vector<double> pu = action_probabilities(params, chain.context_id(task, u));
      alive *= pu[static_cast<size_t>(chain.correct_action(task, u))];
    }
    for (int u = step + 1; u < chain.chain_length; ++u) {
      const std::vector<double> pu = action_probabilities(params, chain.context_id(task, u));
      suffix *= pu[static_cast<size_t>(chain.correct_action(task, u))];
    }
    const double success_if_correct = alive * suffix;
    for (int a = 0; a < k; ++a) {
      const double truth = (a == chain.correct_action(task, step)) ? success_if_correct : 0.0;
      q_out[static_cast<size_t>(a)] = truth * (1.0 - 2.0 * chain.flip_prob) + chain.flip_prob;
    }
  }
  v_out = 0.0;
  for (int a = 0; a < k; ++a) v_out += probs[static_cast<size_t>(a)] * q_out[static_cast<size_t>(a)];
}

void check_enumerable(const Env& env) {
  const long long cells = static_cast<long long>(env_num_contexts(env)) * env_num_actions(env) *
                          env_horizon(env);
  if (cells > 1'000'000)
    throw std::invalid_argument("environment too large to enumerate exactly (limit 1e6 cells)");
}

}  // namespace

double exact_advantage(const Env& env, const PolicyParams& params, int context, int action) {
  if (context < 0 || context >= env_num_contexts(env))
    throw std::out_of_range("context out of range");
  if (action < 0 || action >= env_num_actions(env)) throw std::out_of_range("action out of range");
  std::vector<double> q;
  double v = 0.0;
  state_action_values(env, params, context, q, v);
  return q[static_cast<size_t>(action)] - v;
}

Matrix true_gradient(const Env& env, const PolicyParams& params) {
  check_enumerable(env);
  const int contexts = env_num_contexts(env);
  const int actions = env_num_actions(env);
  if (params.num_contexts() != contexts || params.num_actions() != actions)
    throw std::invalid_argument("policy shape does not match environment");
  Matrix grad(contexts, actions, 0.0);
  std::vector<double> q;
  double v = 0.0;
  const double context_weight = 1.0 / contexts;
  for (int c = 0; c < contexts; ++c) {
    const std::vector<double> probs = action_probabilities(params, c);
    state_action_values(env, params, c, q, v);
    for (int a = 0; a < actions; ++a) {
      const double weight =
          context_weight * probs[static_cast<size_t>(a)] * (q[static_cast<size_t>(a)] - v);
      if (weight != 0.0) accumulate_logprob_gradient(params, c, a, weight, grad);
    }
  }
  return grad;
}

namespace {

struct SampleTables {
  std::vector<std::vector<double>> probs;       // per context
  std::vector<std::vector<double>> advantages;  // per context, per action
};

SampleTables build_tables(const Env& env, const PolicyParams& params) {
  SampleTables tables;
  const int contexts = env_num_contexts(env);
  tables.probs.reserve(static_cast<size_t>(contexts));
  tables.advantages.reserve(static_cast<size_t>(contexts));
  std::vector<double> q;
  double v = 0.0;
  for (int c = 0; c < contexts; ++c) {
    tables.probs.push_back(action_probabilities(params, c));
    state_action_values(env, params, c, q, v);
    std::vector<double> adv(q.size());
    for (size_t a = 0; a < q.size(); ++a) adv[a] = q[a] - v;
    tables.advantages.push_back(std::move(adv));
  }
  return tables;
}

// Writes grad log pi(a|c) * coeff into row c of `row_scratch` (other rows
// stay zero); caller clears the row afterwards.
void fill_sample(Matrix& scratch, const std::vector<double>& probs, int context, int action,
                 double coeff) {
  for (int a = 0; a < scratch.cols; ++a)
    scratch(context, a) = -coeff * probs[static_cast<size_t>(a)];
  scratch(context, action) += coeff;
}

}  // namespace

GradientStats mc_gradient_stats(const Env& env, const PolicyParams& params,
                                const LabConfig& cfg) {
  if (cfg.samples < 1) throw std::invalid_argument("sample count must be >= 1");
  if (cfg.workers < 1) throw std::invalid_argument("worker count must be >= 1");
  if (cfg.sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  check_enumerable(env);

  const Matrix g_true = true_gradient(env, params);
  const SampleTables tables = build_tables(env, params);
  const int contexts = env_num_contexts(env);
  const int actions = env_num_actions(env);
  const bool gated = cfg.estimator == LabEstimator::Phase1;

  MomentAccumulator total(contexts, actions);
  long double mse_acc = 0.0L;
  long double sq_acc = 0.0L;
  long double sq_pos_acc = 0.0L;

  const long long base = cfg.samples / cfg.workers;
  const long long remainder = cfg.samples % cfg.workers;
  Matrix scratch(contexts, actions, 0.0);
  for (int w = 0; w < cfg.workers; ++w) {
    const long long shard = base + (w < remainder ? 1 : 0);
    Rng rng(Rng::derive_seed(cfg.seed, static_cast<uint64_t>(w)));
    MomentAccumulator local(contexts, actions);
    for (long long i = 0; i < shard; ++i) {
      const int c = rng.uniform_int(contexts);
      const int a = rng.categorical(tables.probs[static_cast<size_t>(c)]);
      double a_hat = tables.advantages[static_cast<size_t>(c)][static_cast<size_t>(a)];
      if (cfg.sigma > 0.0) a_hat += rng.normal(0.0, cfg.sigma);
      sq_acc += static_cast<long double>(a_hat) * a_hat;
      if (a_hat > 0.0) sq_pos_acc += static_cast<long double>(a_hat) * a_hat;
      const double coeff = (gated && a_hat < 0.0) ? 0.0 : a_hat;
      fill_sample(scratch, tables.probs[static_cast<size_t>(c)], c, a, coeff);
      local.add(scratch);
      long double err = 0.0L;
      for (size_t j = 0; j < scratch.data.size(); ++j) {
        const long double d = static_cast<long double>(scratch.data[j]) - g_true.data[j];
        err += d * d;
      }
      mse_acc += err;
      for (int k = 0; k < actions; ++k) scratch(c, k) = 0.0;
    }
    total.merge(local);
  }

  GradientStats stats;
  stats.samples = total.count();
  stats.mean_gradient = total.mean();
  stats.bias_norm = l2_distance(stats.mean_gradient, g_true);
  stats.variance_trace = total.variance_trace();
  stats.mse = static_cast<double>(mse_acc / static_cast<long double>(stats.samples));
  stats.ratio_halving =
      sq_acc > 0.0L ? static_cast<double>(sq_pos_acc / sq_acc) : 0.0;
  return stats;
}

Matrix filtered_estimator_bias(const Env& env, const PolicyParams& params, double sigma,
                               long long samples, uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("sample count must be >= 1");
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  check_enumerable(env);
  const SampleTables tables = build_tables(env, params);
  const int contexts = env_num_contexts(env);
  const int actions = env_num_actions(env);
  MomentAccumulator acc(contexts, actions);
  Matrix scratch(contexts, actions, 0.0);
  Rng rng(seed);
  for (long long i = 0; i < samples; ++i) {
    const int c = rng.uniform_int(contexts);
    const int a = rng.categorical(tables.probs[static_cast<size_t>(c)]);
    double a_hat = tables.advantages[static_cast<size_t>(c)][static_cast<size_t>(a)];
    if (sigma > 0.0) a_hat += rng.normal(0.0, sigma);
    const double coeff = a_hat <= 0.0 ? a_hat : 0.0;
    fill_sample(scratch, tables.probs[static_cast<size_t>(c)], c, a, coeff);
    acc.add(scratch);
    for (int k = 0; k < actions; ++k) scratch(c, k) = 0.0;
  }
  return acc.mean();
}

HalvingCheck variance_halving_check(double sigma, long long samples, uint64_t seed, double tol,
                                    double mean) {
  if (!(sigma > 0.0)) throw std::invalid_argument("halving check needs sigma > 0");
  if (samples < 1) throw std::invalid_argument("sample count must be >= 1");
  long double sum = 0.0L, sq = 0.0L, sq_pos = 0.0L;
  Rng rng(seed);
  for (long long i = 0; i < samples; ++i) {
    const double x = rng.normal(mean, sigma);
    sum += x;
    sq += static_cast<long double>(x) * x;
    if (x > 0.0) sq_pos += static_cast<long double>(x) * x;
  }
  HalvingCheck check;
  check.ratio = sq > 0.0L ? static_cast<double>(sq_pos / sq) : 0.0;
  const auto n = static_cast<long double>(samples);
  check.sample_mean = static_cast<double>(sum / n);
  check.sample_second = static_cast<double>(sq / n);
  check.sample_variance =
      static_cast<double>(sq / n - (sum / n) * (sum / n));
  // Closed form for N(mean, sigma^2):
  //   E[X^2 1{X>0}] = (m^2 + s^2) Phi(m/s) + m s phi(m/s)
  const double z = mean / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double second = mean * mean + sigma * sigma;
  check.expected = (second * cdf + mean * sigma * pdf) / second;
  check.pass = std::abs(check.ratio - check.expected) <= tol;
  return check;
}

}  // namespace capolab
