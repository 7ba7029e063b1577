#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capolab/config.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using capolab::ConfigError;
using capolab::TrainAbort;

std::string fmt(double value) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

struct ManifestWriter {
  std::vector<std::pair<std::string, std::string>> entries;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
  void add(const std::string& key, double value) { entries.emplace_back(key, fmt(value)); }
  void add(const std::string& key, long long value) {
    entries.emplace_back(key, std::to_string(value));
  }

  void add_config(const capolab::TrainConfig& cfg, const std::string& env_path) {
    add("env_file", env_path);
    if (const auto* chain = std::get_if<capolab::ChainTask>(&cfg.env)) {
      add("env", "chain");
      add("env.contexts", static_cast<long long>(chain->tasks));
      add("env.actions", static_cast<long long>(chain->actions));
      add("env.chain_length", static_cast<long long>(chain->chain_length));
      add("env.flip_prob", chain->flip_prob);
    } else {
      const auto& bandit = std::get<capolab::GroupedBandit>(cfg.env);
      add("env", "bandit");
      add("env.contexts", static_cast<long long>(bandit.num_contexts()));
      add("env.actions", static_cast<long long>(bandit.num_actions()));
    }
    add("algo", capolab::estimator_to_string(cfg.algo));
    add("curriculum", capolab::curriculum_to_string(cfg.curriculum));
    add("switch_fraction", cfg.switch_fraction);
    add("total_steps", static_cast<long long>(cfg.total_steps));
    add("group_size", static_cast<long long>(cfg.group_size));
    add("batch_groups", static_cast<long long>(cfg.batch_groups));
    add("inner_epochs", static_cast<long long>(cfg.inner_epochs));
    add("epsilon", cfg.clip.epsilon);
    add("beta", cfg.clip.beta);
    add("gamma", cfg.gae.gamma);
    add("lam", cfg.gae.lambda);
    add("eps_std", cfg.eps_std);
    add("noise_sigma", cfg.noise.sigma);
    add("lr", cfg.lr.schedule.alpha0);
    add("lr_decay", cfg.lr.decay ? "true" : "false");
    add("lr_tau", cfg.lr.schedule.tau);
    add("pass_k", static_cast<long long>(cfg.pass_k));
    add("seed", std::to_string(cfg.seed));
  }

  void finish(const std::string& out_dir, const std::vector<std::string>& artifacts) {
    std::string joined;
    for (const auto& a : artifacts) {
      if (!joined.empty()) joined += ',';
      joined += a;
    }
    add("artifacts", joined);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    add("duration_seconds", elapsed.count());
    add("version", kVersion);
    capolab::write_manifest((std::filesystem::path(out_dir) / "manifest.txt").string(), entries);
  }
};

std::string out_path(const std::string& out_dir, const std::string& name) {
  return (std::filesystem::path(out_dir) / name).string();
}

void prepare_out(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output dir '" + out_dir + "': " + ec.message(), 0);
}

capolab::TrainConfig load_train_config(const std::string& config_path,
                                       const std::optional<uint64_t>& seed_override,
                                       std::string& env_path_out) {
  capolab::ParsedTrainConfig parsed = capolab::parse_train_config(config_path);
  if (seed_override) {
    parsed.train.seed = *seed_override;
    parsed.seed_given = true;
  }
  if (!parsed.seed_given)
    throw ConfigError(config_path + ": missing mandatory key 'seed' (or pass --seed)", 0);
  env_path_out = parsed.env_path;
  return parsed.train;
}

int run_train(const std::string& config_path, const std::string& out_dir,
              const std::optional<uint64_t>& seed_override) {
  ManifestWriter manifest;
  std::string env_path;
  const capolab::TrainConfig cfg = load_train_config(config_path, seed_override, env_path);
  prepare_out(out_dir);
  manifest.add("command", "train");
  manifest.add("config", config_path);
  manifest.add_config(cfg, env_path);
  try {
    const capolab::TrainResult result = capolab::train(cfg);
    capolab::write_metrics_csv(result.metrics, out_path(out_dir, "metrics.csv"));
    capolab::save_checkpoint(result.final_params, out_path(out_dir, "checkpoint.txt"));
    manifest.add("final_mean_reward", result.final_mean_reward);
    manifest.add("final_expected_reward", result.final_expected_reward);
    manifest.finish(out_dir, {"metrics.csv", "checkpoint.txt"});
    std::cout << "train: " << cfg.total_steps << " steps, final mean reward "
              << fmt(result.final_mean_reward) << ", exact expected reward "
              << fmt(result.final_expected_reward) << "\n";
    return 0;
  } catch (const TrainAbort& e) {
    capolab::write_metrics_csv(e.partial_metrics, out_path(out_dir, "metrics.csv"));
    manifest.add("aborted_at_step", static_cast<long long>(e.step));
    manifest.add("abort_reason", e.what());
    manifest.finish(out_dir, {"metrics.csv"});
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }
}

int run_sweep(const std::string& config_path, const std::string& out_dir,
              const std::optional<uint64_t>& seed_override, std::vector<double> fractions,
              int num_seeds, bool with_endpoints) {
  ManifestWriter manifest;
  std::string env_path;
  const capolab::TrainConfig cfg = load_train_config(config_path, seed_override, env_path);
  if (fractions.empty()) fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 1.0};
  for (double f : fractions)
    if (f < 0.0 || f > 1.0)
      throw ConfigError("sweep fraction " + fmt(f) + " outside [0,1]", 0);
  if (with_endpoints) {
    if (std::find(fractions.begin(), fractions.end(), 0.0) == fractions.end())
      fractions.insert(fractions.begin(), 0.0);
    if (std::find(fractions.begin(), fractions.end(), 1.0) == fractions.end())
      fractions.push_back(1.0);
  }
  if (num_seeds < 1) throw ConfigError("--seeds must be >= 1", 0);
  prepare_out(out_dir);
  const std::vector<uint64_t> seeds = capolab::seed_list(cfg.seed, num_seeds);
  const std::vector<capolab::SweepRow> rows =
      capolab::sweep_switch_points(cfg, fractions, seeds);
  capolab::write_sweep_csv(rows, out_path(out_dir, "sweep.csv"));
  manifest.add("command", "sweep");
  manifest.add("config", config_path);
  manifest.add_config(cfg, env_path);
  std::string flist;
  for (double f : fractions) flist += (flist.empty() ? "" : ",") + fmt(f);
  manifest.add("fractions", flist);
  manifest.add("seeds", static_cast<long long>(num_seeds));
  manifest.finish(out_dir, {"sweep.csv"});
  std::cout << "sweep: " << rows.size() << " rows over " << fractions.size() << " fractions x "
            << seeds.size() << " seeds\n";
  return 0;
}

capolab::Env default_lab_env() {
  capolab::GroupedBandit bandit;
  bandit.reward_table = {{1.0, 0.0}, {0.8, 0.2}};
  return bandit;
}

int run_lab(const std::string& out_dir, double sigma, long long n, uint64_t seed, int workers) {
  if (!(sigma > 0.0)) throw ConfigError("--sigma must be > 0 (the halving check needs noise)", 0);
  if (n < 1000) throw ConfigError("--n must be >= 1000", 0);
  if (workers < 1) throw ConfigError("--workers must be >= 1", 0);
  prepare_out(out_dir);
  ManifestWriter manifest;

  const capolab::Env env = default_lab_env();
  const capolab::PolicyParams params(capolab::env_num_contexts(env),
                                     capolab::env_num_actions(env), 0.0);

  capolab::LabConfig lab;
  lab.sigma = sigma;
  lab.samples = n;
  lab.workers = workers;
  lab.seed = seed;
  lab.estimator = capolab::LabEstimator::Phase1;
  const capolab::GradientStats phase1 = capolab::mc_gradient_stats(env, params, lab);
  lab.estimator = capolab::LabEstimator::Phase2;
  const capolab::GradientStats phase2 = capolab::mc_gradient_stats(env, params, lab);
  const capolab::HalvingCheck halving = capolab::variance_halving_check(sigma, n, seed, 0.02);

  std::vector<capolab::LabRow> rows;
  rows.push_back({"phase1", sigma, phase1.samples, phase1.bias_norm, phase1.variance_trace,
                  phase1.mse, phase1.ratio_halving});
  rows.push_back({"phase2", sigma, phase2.samples, phase2.bias_norm, phase2.variance_trace,
                  phase2.mse, phase2.ratio_halving});
  rows.push_back({"gaussian", sigma, n, std::abs(halving.sample_mean), halving.sample_variance,
                  halving.sample_second, halving.ratio});
  capolab::write_lab_csv(rows, out_path(out_dir, "lab.csv"));

  const double se3 = 3.0 * std::sqrt(phase2.variance_trace / static_cast<double>(phase2.samples));
  const bool unbiased_ok = phase2.bias_norm <= se3;
  std::cout << "halving ratio " << fmt(halving.ratio) << " (expected " << fmt(halving.expected)
            << ", tol 0.02): " << (halving.pass ? "PASS" : "FAIL") << "\n";
  std::cout << "phase2 bias_norm " << fmt(phase2.bias_norm) << " (3 MC standard errors "
            << fmt(se3) << "): " << (unbiased_ok ? "PASS" : "FAIL") << "\n";

  manifest.add("command", "lab");
  manifest.add("sigma", sigma);
  manifest.add("n", n);
  manifest.add("workers", static_cast<long long>(workers));
  manifest.add("seed", std::to_string(seed));
  manifest.add("halving_ratio", halving.ratio);
  manifest.add("halving_pass", halving.pass ? "true" : "false");
  manifest.add("unbiasedness_pass", unbiased_ok ? "true" : "false");
  manifest.finish(out_dir, {"lab.csv"});
  return 0;
}

int run_compare(const std::string& config_path, const std::string& out_dir,
                const std::optional<uint64_t>& seed_override, int num_seeds,
                const std::string& extra_curriculum) {
  ManifestWriter manifest;
  std::string env_path;
  const capolab::TrainConfig cfg = load_train_config(config_path, seed_override, env_path);
  if (num_seeds < 1) throw ConfigError("--seeds must be >= 1", 0);
  std::vector<capolab::Curriculum> curricula = {capolab::Curriculum::None,
                                                capolab::Curriculum::Capo};
  if (!extra_curriculum.empty()) {
    capolab::Curriculum extra;
    try {
      extra = capolab::curriculum_from_string(extra_curriculum);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), 0);
    }
    if (std::find(curricula.begin(), curricula.end(), extra) == curricula.end())
      curricula.push_back(extra);
  }
  prepare_out(out_dir);
  const std::vector<capolab::CompareRow> rows =
      capolab::compare_algorithms(cfg, curricula, capolab::seed_list(cfg.seed, num_seeds));
  capolab::write_compare_csv(rows, out_path(out_dir, "compare.csv"));
  manifest.add("command", "compare");
  manifest.add("config", config_path);
  manifest.add_config(cfg, env_path);
  manifest.add("seeds", static_cast<long long>(num_seeds));
  std::string clist;
  for (auto c : curricula) clist += (clist.empty() ? "" : ",") + capolab::curriculum_to_string(c);
  manifest.add("curricula", clist);
  manifest.finish(out_dir, {"compare.csv"});
  std::cout << "compare: " << rows.size() << " rows\n";
  return 0;
}

int run_eval(const std::string& config_path, const std::string& checkpoint_path,
             const std::string& out_dir, const std::optional<uint64_t>& seed_override,
             int episodes) {
  ManifestWriter manifest;
  std::string env_path;
  const capolab::TrainConfig cfg = load_train_config(config_path, seed_override, env_path);
  if (episodes < 1) throw ConfigError("--episodes must be >= 1", 0);
  capolab::PolicyParams params = capolab::load_checkpoint(checkpoint_path);
  if (params.num_contexts() != capolab::env_num_contexts(cfg.env) ||
      params.num_actions() != capolab::env_num_actions(cfg.env))
    throw ConfigError("checkpoint shape does not match the configured environment", 0);
  prepare_out(out_dir);
  capolab::Rng rng(cfg.seed);
  const double greedy = capolab::eval_policy(cfg.env, params, episodes, rng);
  const double expected = capolab::expected_policy_reward(cfg.env, params);
  const double optimal = capolab::optimal_expected_reward(cfg.env);

  std::ofstream out(out_path(out_dir, "eval.csv"));
  if (!out) throw std::runtime_error("cannot write eval.csv");
  out << "episodes,greedy_mean_reward,expected_reward,optimal_reward\n";
  out << episodes << ',' << fmt(greedy) << ',' << fmt(expected) << ',' << fmt(optimal) << '\n';
  out.close();

  manifest.add("command", "eval");
  manifest.add("config", config_path);
  manifest.add_config(cfg, env_path);
  manifest.add("checkpoint", checkpoint_path);
  manifest.add("episodes", static_cast<long long>(episodes));
  manifest.add("greedy_mean_reward", greedy);
  manifest.add("expected_reward", expected);
  manifest.add("optimal_reward", optimal);
  manifest.finish(out_dir, {"eval.csv"});
  std::cout << "eval: greedy mean reward " << fmt(greedy) << ", exact expected " << fmt(expected)
            << ", optimal " << fmt(optimal) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capolab: curriculum-gated policy optimization laboratory"};
  app.set_version_flag("--version", std::string("capolab ") + kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", checkpoint_path, extra_curriculum;
  std::optional<uint64_t> seed_override;
  std::vector<double> fractions;
  int num_seeds = 1, workers = 1, episodes = 1000;
  double sigma = 1.0;
  long long n = 1000000;
  uint64_t lab_seed = 0;
  bool with_endpoints = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "path to a key=value config file")->required();
    cmd->add_option("--out", out_dir, "output directory (created if missing)");
    cmd->add_option("--seed", seed_override, "seed override (takes precedence over the config)");
  };

  CLI::App* train = app.add_subcommand("train", "run one training experiment");
  add_common(train, true);

  CLI::App* sweep = app.add_subcommand("sweep", "train across switch fractions");
  add_common(sweep, true);
  sweep->add_option("--fractions", fractions, "comma-separated switch fractions in [0,1]")
      ->delimiter(',');
  sweep->add_option("--seeds", num_seeds, "number of seeds (base seed plus derived streams)");
  sweep->add_flag("--with-endpoints", with_endpoints, "force fractions 0 and 1 into the sweep");

  CLI::App* lab = app.add_subcommand("lab", "Monte Carlo estimator study");
  lab->add_option("--out", out_dir, "output directory (created if missing)");
  lab->add_option("--sigma", sigma, "advantage noise stddev (> 0)");
  lab->add_option("--n", n, "Monte Carlo sample count (>= 1000)");
  lab->add_option("--seed", lab_seed, "seed for the sampling streams");
  lab->add_option("--workers", workers, "independent shards merged into the final statistics");

  CLI::App* compare = app.add_subcommand("compare", "algorithms x curricula comparison table");
  add_common(compare, true);
  compare->add_option("--seeds", num_seeds, "number of seeds (medians reported)");
  compare->add_option("--curriculum", extra_curriculum,
                      "extra curriculum variant to include (e.g. static)");

  CLI::App* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  add_common(eval, true);
  eval->add_option("--checkpoint", checkpoint_path, "policy checkpoint to evaluate")->required();
  eval->add_option("--episodes", episodes, "rollout count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return run_train(config_path, out_dir, seed_override);
    if (sweep->parsed())
      return run_sweep(config_path, out_dir, seed_override, fractions, num_seeds, with_endpoints);
    if (lab->parsed()) return run_lab(out_dir, sigma, n, lab_seed, workers);
    if (compare->parsed())
      return run_compare(config_path, out_dir, seed_override, num_seeds, extra_curriculum);
    if (eval->parsed())
      return run_eval(config_path, checkpoint_path, out_dir, seed_override, episodes);
  } catch (const ConfigError& e) {
    if (e.line > 0)
      std::cerr << "config error (line " << e.line << "): " << e.what() << "\n";
    else
      std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const TrainAbort& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
