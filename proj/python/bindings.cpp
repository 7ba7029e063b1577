// Python bindings for the capolab core library.
//
// The module mirrors the C++ API closely: small value types are exposed as
// classes with read/write fields, and operations that mutate a
// std::vector<TrajectoryGroup> batch in place are wrapped to return the
// updated batch (Python lists cross the boundary by copy).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "capolab/advantage.hpp"
#include "capolab/config.hpp"
#include "capolab/env.hpp"
#include "capolab/lab.hpp"
#include "capolab/matrix.hpp"
#include "capolab/objective.hpp"
#include "capolab/policy.hpp"
#include "capolab/rng.hpp"
#include "capolab/schedule.hpp"
#include "capolab/trainer.hpp"

namespace py = pybind11;
using namespace capolab;

namespace {

std::vector<std::vector<double>> matrix_tolist(const Matrix& m) {
  std::vector<std::vector<double>> rows(static_cast<size_t>(m.rows));
  for (int r = 0; r < m.rows; ++r) {
    rows[static_cast<size_t>(r)].resize(static_cast<size_t>(m.cols));
    for (int c = 0; c < m.cols; ++c) rows[static_cast<size_t>(r)][static_cast<size_t>(c)] = m(r, c);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Policy-optimization laboratory: tabular softmax policies, exactly "
      "analyzable environments, group-relative advantage estimators, a "
      "two-phase advantage-gated curriculum objective, and a Monte Carlo "
      "gradient-estimator lab.";
  m.attr("__version__") = "0.1.0";

  // ---------------------------------------------------------------- matrix
  py::class_<Matrix>(m, "Matrix", "Dense row-major matrix of doubles (rows = contexts, cols = actions).")
      .def(py::init<>())
      .def(py::init<int, int, double>(), py::arg("rows"), py::arg("cols"), py::arg("fill") = 0.0)
      .def_readonly("rows", &Matrix::rows)
      .def_readonly("cols", &Matrix::cols)
      .def("at", [](const Matrix& mat, int r, int c) { return mat(r, c); }, py::arg("row"), py::arg("col"))
      .def("set", [](Matrix& mat, int r, int c, double v) { mat(r, c) = v; }, py::arg("row"),
           py::arg("col"), py::arg("value"))
      .def("fill", &Matrix::fill, py::arg("value"))
      .def("add_scaled", &Matrix::add_scaled, py::arg("other"), py::arg("scale"),
           "In-place self += scale * other.")
      .def("l2_norm", &Matrix::l2_norm)
      .def("all_finite", &Matrix::all_finite)
      .def("tolist", &matrix_tolist, "Copy out as a list of row lists.")
      .def("__len__", [](const Matrix& mat) { return mat.size(); });
  m.def("l2_distance", &l2_distance, py::arg("a"), py::arg("b"),
        "Euclidean distance between two same-shape matrices.");

  // ---------------------------------------------------------------- policy
  py::class_<PolicyParams>(m, "PolicyParams",
                           "Tabular contextual softmax policy: one logit row per context.")
      .def(py::init<>())
      .def(py::init<int, int, double>(), py::arg("contexts"), py::arg("actions"),
           py::arg("fill") = 0.0)
      .def_readwrite("logits", &PolicyParams::logits)
      .def("num_contexts", &PolicyParams::num_contexts)
      .def("num_actions", &PolicyParams::num_actions);

  py::class_<ReferencePolicy>(m, "ReferencePolicy",
                              "Frozen snapshot of the policy taken at training start; the KL anchor.")
      .def(py::init<const PolicyParams&>(), py::arg("params"))
      .def_property_readonly("params", &ReferencePolicy::params);

  py::class_<Trajectory>(m, "Trajectory", "One sampled episode; advantage fields filled by estimators.")
      .def(py::init<>())
      .def_readwrite("context_ids", &Trajectory::context_ids)
      .def_readwrite("actions", &Trajectory::actions)
      .def_readwrite("behavior_logps", &Trajectory::behavior_logps)
      .def_readwrite("rewards", &Trajectory::rewards)
      .def_readwrite("advantage_tokens", &Trajectory::advantage_tokens)
      .def_readwrite("advantage_scalar", &Trajectory::advantage_scalar)
      .def("length", &Trajectory::length)
      .def("has_advantages", &Trajectory::has_advantages)
      .def("total_reward", &Trajectory::total_reward);

  py::class_<TrajectoryGroup>(m, "TrajectoryGroup",
                              "G trajectories that share one root task.")
      .def(py::init<>())
      .def_readwrite("task_id", &TrajectoryGroup::task_id)
      .def_readwrite("items", &TrajectoryGroup::items)
      .def("size", &TrajectoryGroup::size);

  m.def("action_probabilities", &action_probabilities, py::arg("params"), py::arg("context"),
        "Softmax probabilities of one context row, log-sum-exp stabilized.");
  m.def("log_prob", &log_prob, py::arg("params"), py::arg("context"), py::arg("action"),
        "log softmax(logits[context])[action]; always <= 0.");
  m.def("sample_action", &sample_action, py::arg("params"), py::arg("context"), py::arg("rng"),
        "Draw (action, log_prob) from the context's softmax distribution.");
  m.def("logprob_gradient", &logprob_gradient, py::arg("params"), py::arg("context"),
        py::arg("action"), "d log pi(action|context) / d logits.");
  m.def("policy_entropy", &policy_entropy, py::arg("params"), py::arg("context"),
        "Shannon entropy of one context's distribution, in [0, ln K].");
  m.def("mean_policy_entropy", &mean_policy_entropy, py::arg("params"),
        "Mean entropy over all contexts.");
  m.def(
      "kl_to_reference",
      [](const PolicyParams& params, const ReferencePolicy& ref, const std::vector<int>& contexts) {
        return kl_to_reference(params, ref, std::span<const int>(contexts));
      },
      py::arg("params"), py::arg("ref"), py::arg("contexts"),
      "Mean over `contexts` of the exact categorical KL(params || ref).");
  m.def(
      "kl_gradient",
      [](const PolicyParams& params, const ReferencePolicy& ref, const std::vector<int>& contexts) {
        return kl_gradient(params, ref, std::span<const int>(contexts));
      },
      py::arg("params"), py::arg("ref"), py::arg("contexts"),
      "Gradient of kl_to_reference w.r.t. the logits.");
  m.def("save_checkpoint", &save_checkpoint, py::arg("params"), py::arg("path"),
        "Plain-text full-precision checkpoint.");
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  // ------------------------------------------------------------------- rng
  py::class_<Rng>(m, "Rng",
                  "Deterministic random stream; fixed engine-step cost per draw "
                  "(uniform 1, normal 2, categorical 1).")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &Rng::uniform)
      .def("bernoulli", &Rng::bernoulli, py::arg("p"))
      .def("uniform_int", &Rng::uniform_int, py::arg("n"))
      .def("normal", &Rng::normal, py::arg("mean") = 0.0, py::arg("stddev") = 1.0)
      .def(
          "categorical",
          [](Rng& rng, const std::vector<double>& probs) {
            return rng.categorical(std::span<const double>(probs));
          },
          py::arg("probs"))
      .def("raw", &Rng::raw)
      .def_static("derive_seed", &Rng::derive_seed, py::arg("base"), py::arg("stream"),
                  "splitmix64 scramble of (base, stream) for independent streams.");
  m.def("seed_list", &seed_list, py::arg("base"), py::arg("count"),
        "Seed list for multi-seed commands: base first, then derived streams.");

  // ---------------------------------------------------------- environments
  py::class_<GroupedBandit>(m, "GroupedBandit",
                            "Stateless one-step environment: reward ~ Bernoulli(reward_table[c][a]).")
      .def(py::init<>())
      .def(py::init([](std::vector<std::vector<double>> table) {
             GroupedBandit b;
             b.reward_table = std::move(table);
             return b;
           }),
           py::arg("reward_table"))
      .def_readwrite("reward_table", &GroupedBandit::reward_table)
      .def("num_contexts", &GroupedBandit::num_contexts)
      .def("num_actions", &GroupedBandit::num_actions)
      .def("horizon", &GroupedBandit::horizon);

  py::class_<ChainTask>(m, "ChainTask",
                        "Multi-step chain with sparse terminal binary reward; correct action at "
                        "step t of task c is (c + t) mod K; flip_prob adds terminal label noise.")
      .def(py::init<>())
      .def(py::init([](int tasks, int actions, int chain_length, double flip_prob) {
             ChainTask t;
             t.tasks = tasks;
             t.actions = actions;
             t.chain_length = chain_length;
             t.flip_prob = flip_prob;
             return t;
           }),
           py::arg("tasks") = 1, py::arg("actions") = 2, py::arg("chain_length") = 2,
           py::arg("flip_prob") = 0.0)
      .def_readwrite("tasks", &ChainTask::tasks)
      .def_readwrite("actions", &ChainTask::actions)
      .def_readwrite("chain_length", &ChainTask::chain_length)
      .def_readwrite("flip_prob", &ChainTask::flip_prob)
      .def("num_contexts", &ChainTask::num_contexts)
      .def("num_actions", &ChainTask::num_actions)
      .def("horizon", &ChainTask::horizon)
      .def("correct_action", &ChainTask::correct_action, py::arg("task"), py::arg("step"))
      .def("context_id", &ChainTask::context_id, py::arg("task"), py::arg("step"));

  m.def("env_num_contexts", &env_num_contexts, py::arg("env"));
  m.def("env_num_actions", &env_num_actions, py::arg("env"));
  m.def("env_horizon", &env_horizon, py::arg("env"));
  m.def("env_num_tasks", &env_num_tasks, py::arg("env"));
  m.def("optimal_expected_reward", &optimal_expected_reward, py::arg("env"),
        "Best expected total reward over deterministic policies (uniform tasks).");
  m.def("expected_policy_reward", &expected_policy_reward, py::arg("env"), py::arg("params"),
        "Exact expected total reward of the policy (label noise excluded).");

  py::class_<NoiseModel>(m, "NoiseModel",
                         "Zero-mean Gaussian perturbation applied to advantages after estimation.")
      .def(py::init<>())
      .def(py::init([](double sigma) { return NoiseModel{sigma}; }), py::arg("sigma"))
      .def_readwrite("sigma", &NoiseModel::sigma);

  m.def("rollout", &rollout, py::arg("env"), py::arg("params"), py::arg("task_id"), py::arg("rng"),
        "Sample one episode of the given root task.");
  m.def("rollout_group", &rollout_group, py::arg("env"), py::arg("params"), py::arg("task_id"),
        py::arg("group_size"), py::arg("rng"),
        "G i.i.d. episodes of the same task (requires G >= 2).");
  m.def(
      "inject_advantage_noise",
      [](Trajectory& traj, const NoiseModel& noise, Rng& rng) {
        inject_advantage_noise(traj, noise, rng);
      },
      py::arg("trajectory"), py::arg("noise"), py::arg("rng"),
      "Perturb each token advantage by N(0, sigma^2) in place and recompute the scalar.");
  m.def(
      "inject_batch_advantage_noise",
      [](std::vector<TrajectoryGroup> batch, const NoiseModel& noise, Rng& rng) {
        inject_advantage_noise(batch, noise, rng);
        return batch;
      },
      py::arg("batch"), py::arg("noise"), py::arg("rng"),
      "Batch version; returns the perturbed batch.");

  // ------------------------------------------------------------ estimators
  py::enum_<EstimatorKind>(m, "EstimatorKind")
      .value("GRPO", EstimatorKind::Grpo)
      .value("PPO", EstimatorKind::Ppo)
      .value("RLOO", EstimatorKind::Rloo)
      .value("REINFORCEPP", EstimatorKind::Reinforcepp);
  m.def("estimator_from_string", &estimator_from_string, py::arg("name"));
  m.def("estimator_to_string", &estimator_to_string, py::arg("kind"));

  py::class_<ValueTable>(m, "ValueTable", "Dense state-value table indexed by context id.")
      .def(py::init<>())
      .def(py::init([](std::vector<double> values) { return ValueTable{std::move(values)}; }),
           py::arg("values"))
      .def_readwrite("values", &ValueTable::values)
      .def("value", &ValueTable::value, py::arg("context"));

  py::class_<GaeConfig>(m, "GaeConfig")
      .def(py::init<>())
      .def(py::init([](double gamma, double lambda) { return GaeConfig{gamma, lambda}; }),
           py::arg("gamma") = 1.0, py::arg("lambda_") = 1.0)
      .def_readwrite("gamma", &GaeConfig::gamma)
      .def_readwrite("lambda_", &GaeConfig::lambda);

  m.def("trajectory_aggregate", &trajectory_aggregate, py::arg("token_values"),
        "Scalar trajectory advantage from token values: the arithmetic mean.");
  m.def("group_normalized_values", &group_normalized_values, py::arg("rewards"),
        py::arg("eps_std"), "(r_i - mean) / (std_pop + eps); all-zero when std_pop == 0.");
  m.def("leave_one_out_values", &leave_one_out_values, py::arg("rewards"),
        "r_i minus the mean of the other entries.");
  m.def("grpo_advantage", &grpo_advantage, py::arg("group"), py::arg("eps_std") = 1e-8,
        "Group-relative normalized advantage, broadcast per token (in place).");
  m.def("rloo_advantage", &rloo_advantage, py::arg("group"),
        "Leave-one-out baseline advantage, broadcast per token (in place).");
  m.def(
      "reinforcepp_advantage",
      [](std::vector<TrajectoryGroup> batch, double eps_std) {
        reinforcepp_advantage(batch, eps_std);
        return batch;
      },
      py::arg("batch"), py::arg("eps_std") = 1e-8,
      "Global-batch standardized advantage; returns the filled batch.");
  m.def("gae_advantage", &gae_advantage, py::arg("trajectory"), py::arg("values"), py::arg("cfg"),
        "Per-token advantage by the backward recursion with terminal bootstrap 0 (in place).");
  m.def("fit_value_table", &fit_value_table, py::arg("batch"), py::arg("num_contexts"),
        py::arg("gamma"),
        "Monte Carlo value fit: mean empirical return-to-go per visited context.");
  m.def(
      "apply_advantages",
      [](std::vector<TrajectoryGroup> batch, EstimatorKind kind, int num_contexts,
         const GaeConfig& gae, double eps_std) {
        apply_advantages(batch, kind, num_contexts, gae, eps_std);
        return batch;
      },
      py::arg("batch"), py::arg("kind"), py::arg("num_contexts"), py::arg("gae"),
      py::arg("eps_std") = 1e-8,
      "Dispatch the chosen estimator over a whole batch; returns the filled batch.");

  py::class_<AdvantageProfile>(m, "AdvantageProfile",
                               "Summary of one batch's scalar advantages after estimation.")
      .def(py::init<>())
      .def_readonly("mean", &AdvantageProfile::mean)
      .def_readonly("stddev", &AdvantageProfile::stddev)
      .def_readonly("frac_positive", &AdvantageProfile::frac_positive)
      .def_readonly("count", &AdvantageProfile::count);
  m.def("summarize_advantages", &summarize_advantages, py::arg("batch"));

  // -------------------------------------------------------------- objective
  py::class_<ClipConfig>(m, "ClipConfig")
      .def(py::init<>())
      .def(py::init([](double epsilon, double beta) { return ClipConfig{epsilon, beta}; }),
           py::arg("epsilon") = 0.2, py::arg("beta") = 0.02)
      .def_readwrite("epsilon", &ClipConfig::epsilon)
      .def_readwrite("beta", &ClipConfig::beta);

  py::class_<ObjectiveReport>(m, "ObjectiveReport")
      .def(py::init<>())
      .def_readonly("value", &ObjectiveReport::value)
      .def_readonly("gradient", &ObjectiveReport::gradient)
      .def_readonly("num_contributing", &ObjectiveReport::num_contributing)
      .def_readonly("num_total", &ObjectiveReport::num_total)
      .def_readonly("kl_value", &ObjectiveReport::kl_value);

  m.def("importance_ratio", &importance_ratio, py::arg("new_logp"), py::arg("old_logp"));
  m.def("clipped_term", &clipped_term, py::arg("ratio"), py::arg("advantage"), py::arg("epsilon"),
        "Pessimistic token term min(ratio*A, clip(ratio, 1-eps, 1+eps)*A).");
  m.def("clipped_term_dlogp", &clipped_term_dlogp, py::arg("ratio"), py::arg("advantage"),
        py::arg("epsilon"), "Active-branch subgradient of clipped_term w.r.t. new_logp.");
  m.def("phase1_objective", &phase1_objective, py::arg("batch"), py::arg("params"), py::arg("ref"),
        py::arg("cfg"),
        "Imitation phase: only advantage >= 0 contributes; full-batch denominator.");
  m.def("phase2_objective", &phase2_objective, py::arg("batch"), py::arg("params"), py::arg("ref"),
        py::arg("cfg"), "Discrimination phase: every trajectory contributes.");

  py::class_<GradientCheckReport>(m, "GradientCheckReport")
      .def(py::init<>())
      .def_readonly("max_rel_error", &GradientCheckReport::max_rel_error)
      .def_readonly("checked_coords", &GradientCheckReport::checked_coords)
      .def_readonly("skipped_coords", &GradientCheckReport::skipped_coords)
      .def_readonly("pass_", &GradientCheckReport::pass);
  m.def("surrogate_gradient_check", &surrogate_gradient_check, py::arg("batch"), py::arg("params"),
        py::arg("ref"), py::arg("cfg"), py::arg("positive_only"), py::arg("step") = 1e-5,
        py::arg("tol") = 1e-4,
        "Central finite-difference audit of the phase gradient (kink-adjacent coords skipped).");

  // -------------------------------------------------------------- schedule
  py::enum_<Phase>(m, "Phase")
      .value("IMITATION", Phase::Imitation)
      .value("DISCRIMINATION", Phase::Discrimination);

  py::class_<PhaseSchedule>(m, "PhaseSchedule",
                            "Imitation for steps [0, switch_step), discrimination afterwards.")
      .def(py::init([](double switch_fraction, int total_steps) {
             return PhaseSchedule{switch_fraction, total_steps};
           }),
           py::arg("switch_fraction") = 0.2, py::arg("total_steps") = 0)
      .def_readwrite("switch_fraction", &PhaseSchedule::switch_fraction)
      .def_readwrite("total_steps", &PhaseSchedule::total_steps)
      .def("switch_step", &PhaseSchedule::switch_step);
  m.def("current_phase", &current_phase, py::arg("schedule"), py::arg("step"));

  py::class_<DifficultyEstimate>(m, "DifficultyEstimate")
      .def(py::init<>())
      .def_readonly("task_id", &DifficultyEstimate::task_id)
      .def_readonly("k", &DifficultyEstimate::k)
      .def_readonly("pass_rate", &DifficultyEstimate::pass_rate);
  m.def("estimate_difficulty", &estimate_difficulty, py::arg("env"), py::arg("params"),
        py::arg("task_id"), py::arg("k"), py::arg("rng"),
        "pass@k difficulty probe: fraction of k rollouts attaining total reward 1.");
  m.def(
      "static_curriculum_order",
      [](const Env& env, const PolicyParams& params, int k, Rng& rng) {
        return static_curriculum_order(env, params, k, rng);
      },
      py::arg("env"), py::arg("params"), py::arg("k"), py::arg("rng"),
      "Probe every task with pass@k, then sort easy-to-hard.");
  m.def("static_unlocked_count", &static_unlocked_count, py::arg("num_tasks"), py::arg("step"),
        py::arg("total_steps"),
        "Unlocked prefix size: grows linearly from 1 task to all tasks.");

  // -------------------------------------------------------------- training
  py::enum_<Curriculum>(m, "Curriculum")
      .value("CAPO", Curriculum::Capo)
      .value("NONE", Curriculum::None)
      .value("STATIC", Curriculum::Static);
  m.def("curriculum_from_string", &curriculum_from_string, py::arg("name"));
  m.def("curriculum_to_string", &curriculum_to_string, py::arg("curriculum"));

  py::class_<StepSchedule>(m, "StepSchedule",
                           "Decay alpha_t = alpha0 / (1 + t / tau).")
      .def(py::init([](double alpha0, double tau) { return StepSchedule{alpha0, tau}; }),
           py::arg("alpha0") = 0.5, py::arg("tau") = 50.0)
      .def_readwrite("alpha0", &StepSchedule::alpha0)
      .def_readwrite("tau", &StepSchedule::tau);
  m.def("step_size", &step_size, py::arg("schedule"), py::arg("step"));

  py::class_<LearningRate>(m, "LearningRate")
      .def(py::init<>())
      .def(py::init([](bool decay, const StepSchedule& schedule) {
             return LearningRate{decay, schedule};
           }),
           py::arg("decay") = false, py::arg("schedule") = StepSchedule{0.5, 50.0})
      .def_readwrite("decay", &LearningRate::decay,
                     "False: constant alpha0. True: alpha0 / (1 + t/tau).")
      .def_readwrite("schedule", &LearningRate::schedule);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("env", &TrainConfig::env)
      .def_readwrite("algo", &TrainConfig::algo)
      .def_readwrite("curriculum", &TrainConfig::curriculum)
      .def_readwrite("switch_fraction", &TrainConfig::switch_fraction)
      .def_readwrite("total_steps", &TrainConfig::total_steps)
      .def_readwrite("group_size", &TrainConfig::group_size)
      .def_readwrite("batch_groups", &TrainConfig::batch_groups)
      .def_readwrite("inner_epochs", &TrainConfig::inner_epochs)
      .def_readwrite("clip", &TrainConfig::clip)
      .def_readwrite("gae", &TrainConfig::gae)
      .def_readwrite("eps_std", &TrainConfig::eps_std)
      .def_readwrite("noise", &TrainConfig::noise)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("pass_k", &TrainConfig::pass_k)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<MetricRecord>(m, "MetricRecord", "One metrics row per optimizer step.")
      .def(py::init<>())
      .def_readonly("step", &MetricRecord::step)
      .def_readonly("phase", &MetricRecord::phase)
      .def_readonly("mean_reward", &MetricRecord::mean_reward)
      .def_readonly("policy_entropy", &MetricRecord::policy_entropy)
      .def_readonly("kl_to_ref", &MetricRecord::kl_to_ref)
      .def_readonly("frac_positive_advantage", &MetricRecord::frac_positive_advantage)
      .def_readonly("num_contributing", &MetricRecord::num_contributing)
      .def_readonly("gradient_norm", &MetricRecord::gradient_norm)
      .def_readonly("objective_value", &MetricRecord::objective_value);

  py::class_<TrainResult>(m, "TrainResult")
      .def(py::init<>())
      .def_readonly("final_params", &TrainResult::final_params)
      .def_readonly("metrics", &TrainResult::metrics)
      .def_readonly("final_mean_reward", &TrainResult::final_mean_reward)
      .def_readonly("final_entropy", &TrainResult::final_entropy)
      .def_readonly("final_expected_reward", &TrainResult::final_expected_reward);

  py::register_exception<TrainAbort>(m, "TrainAbort", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("train", &train, py::arg("cfg"),
        "Deterministic full training loop: same config + seed gives "
        "bitwise-identical metrics and final parameters.");
  m.def("eval_policy", &eval_policy, py::arg("env"), py::arg("params"), py::arg("episodes"),
        py::arg("rng"), "Monte Carlo mean total reward under greedy action selection.");

  py::class_<SweepRow>(m, "SweepRow")
      .def(py::init<>())
      .def_readonly("switch_fraction", &SweepRow::switch_fraction)
      .def_readonly("seed", &SweepRow::seed)
      .def_readonly("final_reward", &SweepRow::final_reward)
      .def_readonly("final_entropy", &SweepRow::final_entropy)
      .def_readonly("final_expected_reward", &SweepRow::final_expected_reward);
  m.def("sweep_switch_points", &sweep_switch_points, py::arg("cfg"), py::arg("fractions"),
        py::arg("seeds"),
        "One full train run per (fraction, seed), fraction-major order.");

  py::class_<CompareRow>(m, "CompareRow")
      .def(py::init<>())
      .def_readonly("algo", &CompareRow::algo)
      .def_readonly("curriculum", &CompareRow::curriculum)
      .def_readonly("final_reward", &CompareRow::final_reward)
      .def_readonly("delta", &CompareRow::delta)
      .def_readonly("final_expected_reward", &CompareRow::final_expected_reward)
      .def_readonly("delta_expected", &CompareRow::delta_expected);
  m.def("compare_algorithms", &compare_algorithms, py::arg("cfg"), py::arg("curricula"),
        py::arg("seeds"),
        "Cross product of the four estimators with the curricula; medians over "
        "matched seeds; delta columns are relative to the `none` curriculum.");

  m.def("write_metrics_csv", &write_metrics_csv, py::arg("metrics"), py::arg("path"));
  m.def("write_sweep_csv", &write_sweep_csv, py::arg("rows"), py::arg("path"));
  m.def("write_compare_csv", &write_compare_csv, py::arg("rows"), py::arg("path"));

  // ------------------------------------------------------------------- lab
  py::enum_<LabEstimator>(m, "LabEstimator")
      .value("PHASE1", LabEstimator::Phase1)
      .value("PHASE2", LabEstimator::Phase2);

  py::class_<LabConfig>(m, "LabConfig")
      .def(py::init<>())
      .def(py::init([](LabEstimator estimator, double sigma, long long samples, int workers,
                       std::uint64_t seed) {
             LabConfig cfg;
             cfg.estimator = estimator;
             cfg.sigma = sigma;
             cfg.samples = samples;
             cfg.workers = workers;
             cfg.seed = seed;
             return cfg;
           }),
           py::arg("estimator") = LabEstimator::Phase2, py::arg("sigma") = 0.0,
           py::arg("samples") = 10000, py::arg("workers") = 1, py::arg("seed") = 0)
      .def_readwrite("estimator", &LabConfig::estimator)
      .def_readwrite("sigma", &LabConfig::sigma)
      .def_readwrite("samples", &LabConfig::samples)
      .def_readwrite("workers", &LabConfig::workers)
      .def_readwrite("seed", &LabConfig::seed);

  py::class_<GradientStats>(m, "GradientStats",
                            "Bias/variance/MSE of the Monte Carlo gradient estimator against the "
                            "exact gradient.")
      .def(py::init<>())
      .def_readonly("mean_gradient", &GradientStats::mean_gradient)
      .def_readonly("bias_norm", &GradientStats::bias_norm)
      .def_readonly("variance_trace", &GradientStats::variance_trace)
      .def_readonly("mse", &GradientStats::mse)
      .def_readonly("ratio_halving", &GradientStats::ratio_halving)
      .def_readonly("samples", &GradientStats::samples);

  m.def("exact_advantage", &exact_advantage, py::arg("env"), py::arg("params"), py::arg("context"),
        py::arg("action"), "Exact A(s, a) = E[r|s,a] - E[r|s] under the policy.");
  m.def("true_gradient", &true_gradient, py::arg("env"), py::arg("params"),
        "Exact target gradient by full enumeration.");
  m.def("mc_gradient_stats", &mc_gradient_stats, py::arg("env"), py::arg("params"), py::arg("cfg"),
        "Monte Carlo study of the single-sample gradient estimator.");
  m.def("filtered_estimator_bias", &filtered_estimator_bias, py::arg("env"), py::arg("params"),
        py::arg("sigma"), py::arg("samples"), py::arg("seed"),
        "Monte Carlo estimate of the imitation gate's filtered-out gradient mass.");

  py::class_<HalvingCheck>(m, "HalvingCheck")
      .def(py::init<>())
      .def_readonly("ratio", &HalvingCheck::ratio)
      .def_readonly("expected", &HalvingCheck::expected)
      .def_readonly("pass_", &HalvingCheck::pass)
      .def_readonly("sample_mean", &HalvingCheck::sample_mean)
      .def_readonly("sample_variance", &HalvingCheck::sample_variance)
      .def_readonly("sample_second", &HalvingCheck::sample_second);
  m.def("variance_halving_check", &variance_halving_check, py::arg("sigma"), py::arg("samples"),
        py::arg("seed"), py::arg("tol") = 0.02, py::arg("mean") = 0.0,
        "Positive-part second-moment ratio of Gaussian draws vs the closed form "
        "(exactly 1/2 at mean 0).");
}
