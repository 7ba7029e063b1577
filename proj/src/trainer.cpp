#include "capolab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace capolab {

Curriculum curriculum_from_string(const std::string& name) {
  if (name == "capo") return Curriculum::Capo;
  if (name == "none") return Curriculum::None;
  if (name == "static") return Curriculum::Static;
  throw std::invalid_argument("unknown curriculum '" + name + "' (expected capo|none|static)");
}

std::string curriculum_to_string(Curriculum c) {
  switch (c) {
    case Curriculum::Capo: return "capo";
    case Curriculum::None: return "none";
    case Curriculum::Static: return "static";
  }
  return "?";
}

namespace {

void validate(const TrainConfig& cfg) {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (cfg.total_steps < 1) fail("total_steps must be >= 1");
  if (cfg.group_size < 2) fail("group_size must be >= 2");
  if (cfg.batch_groups < 1) fail("batch_groups must be >= 1");
  if (cfg.inner_epochs < 1) fail("inner_epochs must be >= 1");
  if (cfg.switch_fraction < 0.0 || cfg.switch_fraction > 1.0) fail("switch_fraction must be in [0,1]");
  if (!(cfg.clip.epsilon > 0.0)) fail("epsilon must be > 0");
  if (cfg.clip.beta < 0.0) fail("beta must be >= 0");
  if (cfg.gae.gamma < 0.0 || cfg.gae.gamma > 1.0) fail("gamma must be in [0,1]");
  if (cfg.gae.lambda < 0.0 || cfg.gae.lambda > 1.0) fail("lam must be in [0,1]");
  if (cfg.eps_std < 0.0) fail("eps_std must be >= 0");
  if (cfg.noise.sigma < 0.0) fail("noise_sigma must be >= 0");
  if (!(cfg.lr.schedule.alpha0 > 0.0)) fail("lr must be > 0");
  if (!(cfg.lr.schedule.tau > 0.0)) fail("lr_tau must be > 0");
  if (cfg.pass_k < 1) fail("pass_k must be >= 1");
  if (env_num_actions(cfg.env) < 2) fail("environment needs at least 2 actions");
  if (const auto* chain = std::get_if<ChainTask>(&cfg.env)) {
    if (chain->chain_length < 2) fail("chain_length must be >= 2");
    if (chain->flip_prob < 0.0 || chain->flip_prob > 1.0) fail("flip_prob must be in [0,1]");
  } else {
    for (const auto& row : std::get<GroupedBandit>(cfg.env).reward_table)
      for (double p : row)
        if (p < 0.0 || p > 1.0) fail("bandit success probabilities must be in [0,1]");
  }
}

double batch_mean_reward(const std::vector<TrajectoryGroup>& batch) {
  double acc = 0.0;
  int n = 0;
  for (const auto& group : batch)
    for (const auto& traj : group.items) {
      acc += traj.total_reward();
      ++n;
    }
  return n ? acc / n : 0.0;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int greedy_action(const PolicyParams& params, int context) {
  int best = 0;
  for (int a = 1; a < params.num_actions(); ++a)
    if (params.logits(context, a) > params.logits(context, best)) best = a;
  return best;
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  validate(cfg);
  const int contexts = env_num_contexts(cfg.env);
  const int actions = env_num_actions(cfg.env);
  const int tasks = env_num_tasks(cfg.env);

  PolicyParams params(contexts, actions, 0.0);
  const ReferencePolicy ref(params);
  Rng rng(cfg.seed);

  std::vector<int> task_order(static_cast<size_t>(tasks));
  std::iota(task_order.begin(), task_order.end(), 0);
  if (cfg.curriculum == Curriculum::Static)
    task_order = static_curriculum_order(cfg.env, params, cfg.pass_k, rng);

  // curriculum=none shares the capo code path with the switch forced to 0,
  // so a zero-fraction capo run is identical to the base algorithm.
  const PhaseSchedule schedule{
      cfg.curriculum == Curriculum::Capo ? cfg.switch_fraction : 0.0, cfg.total_steps};

  std::vector<int> all_contexts(static_cast<size_t>(contexts));
  std::iota(all_contexts.begin(), all_contexts.end(), 0);

  TrainResult result;
  result.metrics.reserve(static_cast<size_t>(cfg.total_steps));
  long long group_counter = 0;

  for (int step = 0; step < cfg.total_steps; ++step) {
    const Phase phase = current_phase(schedule, step);

    std::vector<TrajectoryGroup> batch;
    batch.reserve(static_cast<size_t>(cfg.batch_groups));
    const int selectable = cfg.curriculum == Curriculum::Static
                               ? static_unlocked_count(tasks, step, cfg.total_steps)
                               : tasks;
    for (int b = 0; b < cfg.batch_groups; ++b) {
      const int task = task_order[static_cast<size_t>(group_counter % selectable)];
      ++group_counter;
      batch.push_back(rollout_group(cfg.env, params, task, cfg.group_size, rng));
    }

    apply_advantages(batch, cfg.algo, contexts, cfg.gae, cfg.eps_std);
    if (cfg.noise.sigma > 0.0) inject_advantage_noise(batch, cfg.noise, rng);

    const AdvantageProfile profile = summarize_advantages(batch);
    const double mean_reward = batch_mean_reward(batch);

    MetricRecord record;
    record.step = step;
    record.phase = phase == Phase::Imitation ? 1 : 2;
    record.mean_reward = mean_reward;
    record.frac_positive_advantage = profile.frac_positive;

    for (int epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
      const ObjectiveReport report = phase == Phase::Imitation
                                         ? phase1_objective(batch, params, ref, cfg.clip)
                                         : phase2_objective(batch, params, ref, cfg.clip);
      if (epoch == 0) {
        record.num_contributing = report.num_contributing;
        record.gradient_norm = report.gradient.l2_norm();
        record.objective_value = report.value;
      }
      if (!std::isfinite(report.value) || !report.gradient.all_finite())
        throw TrainAbort("non-finite objective or gradient at step " + std::to_string(step),
                         step, result.metrics);
      const double alpha =
          cfg.lr.decay ? step_size(cfg.lr.schedule, step) : cfg.lr.schedule.alpha0;
      params.logits.add_scaled(report.gradient, alpha);
      if (!params.logits.all_finite())
        throw TrainAbort("non-finite parameters after update at step " + std::to_string(step),
                         step, result.metrics);
    }

    record.policy_entropy = mean_policy_entropy(params);
    record.kl_to_ref = kl_to_reference(params, ref, all_contexts);
    result.metrics.push_back(record);
  }

  result.final_params = std::move(params);
  result.final_mean_reward = result.metrics.back().mean_reward;
  result.final_entropy = result.metrics.back().policy_entropy;
  result.final_expected_reward = expected_policy_reward(cfg.env, result.final_params);
  return result;
}

double eval_policy(const Env& env, const PolicyParams& params, int episodes, Rng& rng) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  const int tasks = env_num_tasks(env);
  double acc = 0.0;
  for (int i = 0; i < episodes; ++i) {
    const int task = i % tasks;
    if (const auto* bandit = std::get_if<GroupedBandit>(&env)) {
      const int action = greedy_action(params, task);
      const double p = bandit->reward_table[static_cast<size_t>(task)][static_cast<size_t>(action)];
      acc += rng.bernoulli(p) ? 1.0 : 0.0;
    } else {
      const auto& chain = std::get<ChainTask>(env);
      bool all_correct = true;
      for (int t = 0; t < chain.chain_length; ++t)
        if (greedy_action(params, chain.context_id(task, t)) != chain.correct_action(task, t))
          all_correct = false;
      double terminal = all_correct ? 1.0 : 0.0;
      if (chain.flip_prob > 0.0 && rng.bernoulli(chain.flip_prob)) terminal = 1.0 - terminal;
      acc += terminal;
    }
  }
  return acc / episodes;
}

std::vector<uint64_t> seed_list(uint64_t base, int count) {
  if (count < 1) throw std::invalid_argument("seed count must be >= 1");
  std::vector<uint64_t> seeds;
  seeds.reserve(static_cast<size_t>(count));
  seeds.push_back(base);
  for (int i = 1; i < count; ++i) seeds.push_back(Rng::derive_seed(base, static_cast<uint64_t>(i)));
  return seeds;
}

std::vector<SweepRow> sweep_switch_points(const TrainConfig& cfg,
                                          const std::vector<double>& fractions,
                                          const std::vector<uint64_t>& seeds) {
  if (fractions.empty() || seeds.empty())
    throw std::invalid_argument("sweep needs at least one fraction and one seed");
  for (double f : fractions)
    if (f < 0.0 || f > 1.0) throw std::invalid_argument("switch fraction outside [0,1]");
  std::vector<SweepRow> rows;
  rows.reserve(fractions.size() * seeds.size());
  for (double fraction : fractions) {
    for (uint64_t seed : seeds) {
      TrainConfig run = cfg;
      run.curriculum = Curriculum::Capo;  // the sweep varies capo's switch point
      run.switch_fraction = fraction;
      run.seed = seed;
      const TrainResult result = train(run);
      rows.push_back({fraction, seed, result.final_mean_reward, result.final_entropy,
                      result.final_expected_reward});
    }
  }
  return rows;
}

std::vector<CompareRow> compare_algorithms(const TrainConfig& cfg,
                                           const std::vector<Curriculum>& curricula,
                                           const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("comparison needs at least one seed");
  if (std::find(curricula.begin(), curricula.end(), Curriculum::None) == curricula.end())
    throw std::invalid_argument("comparison needs the `none` curriculum as its baseline");
  const EstimatorKind algos[] = {EstimatorKind::Grpo, EstimatorKind::Ppo, EstimatorKind::Rloo,
                                 EstimatorKind::Reinforcepp};
  std::vector<CompareRow> rows;
  for (EstimatorKind algo : algos) {
    std::vector<CompareRow> algo_rows;
    double none_reward = 0.0;
    double none_expected = 0.0;
    for (Curriculum curriculum : curricula) {
      std::vector<double> finals;
      std::vector<double> expecteds;
      finals.reserve(seeds.size());
      expecteds.reserve(seeds.size());
      for (uint64_t seed : seeds) {
        TrainConfig run = cfg;
        run.algo = algo;
        run.curriculum = curriculum;
        run.seed = seed;
        const TrainResult result = train(run);
        finals.push_back(result.final_mean_reward);
        expecteds.push_back(result.final_expected_reward);
      }
      CompareRow row;
      row.algo = algo;
      row.curriculum = curriculum;
      row.final_reward = median(finals);
      row.final_expected_reward = median(expecteds);
      if (curriculum == Curriculum::None) {
        none_reward = row.final_reward;
        none_expected = row.final_expected_reward;
      }
      algo_rows.push_back(row);
    }
    for (auto& row : algo_rows) {
      row.delta = row.final_reward - none_reward;
      row.delta_expected = row.final_expected_reward - none_expected;
    }
    rows.insert(rows.end(), algo_rows.begin(), algo_rows.end());
  }
  return rows;
}

namespace {

std::string fmt(double value) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_metrics_csv(const std::vector<MetricRecord>& metrics, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "step,phase,mean_reward,policy_entropy,kl_to_ref,frac_positive_advantage,"
         "num_contributing,gradient_norm,objective_value\n";
  for (const auto& m : metrics)
    out << m.step << ',' << m.phase << ',' << fmt(m.mean_reward) << ',' << fmt(m.policy_entropy)
        << ',' << fmt(m.kl_to_ref) << ',' << fmt(m.frac_positive_advantage) << ','
        << m.num_contributing << ',' << fmt(m.gradient_norm) << ',' << fmt(m.objective_value)
        << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "switch_fraction,seed,final_reward,final_entropy,final_expected_reward\n";
  for (const auto& r : rows)
    out << fmt(r.switch_fraction) << ',' << r.seed << ',' << fmt(r.final_reward) << ','
        << fmt(r.final_entropy) << ',' << fmt(r.final_expected_reward) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "algo,curriculum,final_reward,delta,final_expected_reward,delta_expected\n";
  for (const auto& r : rows)
    out << estimator_to_string(r.algo) << ',' << curriculum_to_string(r.curriculum) << ','
        << fmt(r.final_reward) << ',' << fmt(r.delta) << ',' << fmt(r.final_expected_reward)
        << ',' << fmt(r.delta_expected) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_lab_csv(const std::vector<LabRow>& rows, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "estimator,sigma,n,bias_norm,variance_trace,mse,ratio_halving\n";
  for (const auto& r : rows)
    out << r.estimator << ',' << fmt(r.sigma) << ',' << r.n << ',' << fmt(r.bias_norm) << ','
        << fmt(r.variance_trace) << ',' << fmt(r.mse) << ',' << fmt(r.ratio_halving) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace capolab
