#include "capolab/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace capolab {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

KeyValues parse_lines(std::istream& in, const std::string& origin) {
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ": expected key=value, got '" + content + "'", line_no);
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ": empty key", line_no);
    if (kv.has(key)) throw ConfigError(origin + ": duplicate key '" + key + "'", line_no);
    kv.values[key] = value;
    kv.lines[key] = line_no;
  }
  return kv;
}

[[noreturn]] void bad_value(const KeyValues& kv, const std::string& origin, const std::string& key,
                            const std::string& why) {
  throw ConfigError(origin + ": key '" + key + "': " + why, kv.lines.count(key) ? kv.lines.at(key) : 0);
}

double get_double(const KeyValues& kv, const std::string& origin, const std::string& key) {
  const std::string& raw = kv.values.at(key);
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0' || errno == ERANGE)
    bad_value(kv, origin, key, "expected a real number, got '" + raw + "'");
  return value;
}

long long get_int(const KeyValues& kv, const std::string& origin, const std::string& key) {
  const std::string& raw = kv.values.at(key);
  errno = 0;
  char* end = nullptr;
  const long long value = std::strtoll(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0' || errno == ERANGE)
    bad_value(kv, origin, key, "expected an integer, got '" + raw + "'");
  return value;
}

uint64_t get_uint64(const KeyValues& kv, const std::string& origin, const std::string& key) {
  const std::string& raw = kv.values.at(key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0' || errno == ERANGE || raw.find('-') != std::string::npos)
    bad_value(kv, origin, key, "expected an unsigned integer, got '" + raw + "'");
  return value;
}

bool get_bool(const KeyValues& kv, const std::string& origin, const std::string& key) {
  const std::string& raw = kv.values.at(key);
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  bad_value(kv, origin, key, "expected true|false, got '" + raw + "'");
}

std::vector<double> get_double_list(const KeyValues& kv, const std::string& origin,
                                    const std::string& key) {
  std::vector<double> out;
  std::stringstream stream(kv.values.at(key));
  std::string item;
  while (std::getline(stream, item, ',')) {
    const std::string token = trim(item);
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (token.empty() || end == token.c_str() || *end != '\0' || errno == ERANGE)
      bad_value(kv, origin, key, "expected comma-separated reals, got '" + kv.values.at(key) + "'");
    out.push_back(value);
  }
  if (out.empty()) bad_value(kv, origin, key, "empty list");
  return out;
}

void reject_unknown(const KeyValues& kv, const std::string& origin,
                    const std::set<std::string>& known) {
  for (const auto& [key, value] : kv.values)
    if (!known.count(key))
      throw ConfigError(origin + ": unknown key '" + key + "'", kv.lines.at(key));
}

}  // namespace

KeyValues parse_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path, 0);
  return parse_lines(in, path);
}

KeyValues parse_key_values_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  return parse_lines(in, origin);
}

Env parse_env_spec(const std::string& path) {
  const KeyValues kv = parse_key_values(path);
  if (!kv.has("env")) throw ConfigError(path + ": missing key 'env'", 0);
  const std::string& kind = kv.values.at("env");

  if (kind == "bandit") {
    std::set<std::string> known = {"env", "contexts", "actions"};
    if (!kv.has("contexts")) throw ConfigError(path + ": missing key 'contexts'", 0);
    if (!kv.has("actions")) throw ConfigError(path + ": missing key 'actions'", 0);
    const long long contexts = get_int(kv, path, "contexts");
    const long long actions = get_int(kv, path, "actions");
    if (contexts < 1) bad_value(kv, path, "contexts", "must be >= 1");
    if (actions < 2) bad_value(kv, path, "actions", "must be >= 2");
    GroupedBandit bandit;
    for (long long c = 0; c < contexts; ++c) {
      const std::string key = "reward_row." + std::to_string(c);
      known.insert(key);
      if (!kv.has(key)) throw ConfigError(path + ": missing key '" + key + "'", 0);
      std::vector<double> row = get_double_list(kv, path, key);
      if (row.size() != static_cast<size_t>(actions))
        bad_value(kv, path, key, "expected " + std::to_string(actions) + " entries");
      for (double p : row)
        if (p < 0.0 || p > 1.0) bad_value(kv, path, key, "probabilities must be in [0,1]");
      bandit.reward_table.push_back(std::move(row));
    }
    reject_unknown(kv, path, known);
    return bandit;
  }

  if (kind == "chain") {
    const std::set<std::string> known = {"env", "contexts", "actions", "chain_length", "flip_prob"};
    reject_unknown(kv, path, known);
    for (const char* key : {"contexts", "actions", "chain_length"})
      if (!kv.has(key)) throw ConfigError(path + ": missing key '" + std::string(key) + "'", 0);
    ChainTask chain;
    chain.tasks = static_cast<int>(get_int(kv, path, "contexts"));
    chain.actions = static_cast<int>(get_int(kv, path, "actions"));
    chain.chain_length = static_cast<int>(get_int(kv, path, "chain_length"));
    if (chain.tasks < 1) bad_value(kv, path, "contexts", "must be >= 1");
    if (chain.actions < 2) bad_value(kv, path, "actions", "must be >= 2");
    if (chain.chain_length < 2) bad_value(kv, path, "chain_length", "must be >= 2");
    if (kv.has("flip_prob")) {
      chain.flip_prob = get_double(kv, path, "flip_prob");
      if (chain.flip_prob < 0.0 || chain.flip_prob > 1.0)
        bad_value(kv, path, "flip_prob", "must be in [0,1]");
    }
    return chain;
  }

  bad_value(kv, path, "env", "expected bandit|chain, got '" + kind + "'");
}

ParsedTrainConfig parse_train_config(const std::string& path) {
  const KeyValues kv = parse_key_values(path);
  const std::set<std::string> known = {
      "env_file", "algo",         "curriculum",  "switch_fraction", "total_steps",
      "group_size", "batch_groups", "inner_epochs", "epsilon",       "beta",
      "gamma",      "lam",          "eps_std",      "noise_sigma",   "lr",
      "lr_decay",   "lr_tau",       "pass_k",       "seed"};
  reject_unknown(kv, path, known);
  if (!kv.has("env_file")) throw ConfigError(path + ": missing key 'env_file'", 0);

  ParsedTrainConfig parsed;
  std::filesystem::path env_path(kv.values.at("env_file"));
  if (env_path.is_relative()) env_path = std::filesystem::path(path).parent_path() / env_path;
  parsed.env_path = env_path.string();
  try {
    parsed.train.env = parse_env_spec(parsed.env_path);
  } catch (const ConfigError& e) {
    // A file-level failure of the env spec (unreadable, missing keys) points
    // back at the env_file line of the config; content errors keep their own
    // line within the env file, named in the message.
    if (e.line == 0) throw ConfigError(e.what(), kv.lines.at("env_file"));
    throw;
  }

  auto check = [&](const std::string& key, bool ok, const std::string& why) {
    if (!ok) bad_value(kv, path, key, why);
  };

  TrainConfig& cfg = parsed.train;
  if (kv.has("algo")) {
    try {
      cfg.algo = estimator_from_string(kv.values.at("algo"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ": " + e.what(), kv.lines.at("algo"));
    }
  }
  if (kv.has("curriculum")) {
    try {
      cfg.curriculum = curriculum_from_string(kv.values.at("curriculum"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ": " + e.what(), kv.lines.at("curriculum"));
    }
  }
  if (kv.has("switch_fraction")) {
    cfg.switch_fraction = get_double(kv, path, "switch_fraction");
    check("switch_fraction", cfg.switch_fraction >= 0.0 && cfg.switch_fraction <= 1.0,
          "must be in [0,1]");
  }
  if (kv.has("total_steps")) {
    cfg.total_steps = static_cast<int>(get_int(kv, path, "total_steps"));
    check("total_steps", cfg.total_steps >= 1, "must be >= 1");
  }
  if (kv.has("group_size")) {
    cfg.group_size = static_cast<int>(get_int(kv, path, "group_size"));
    check("group_size", cfg.group_size >= 2, "must be >= 2");
  }
  if (kv.has("batch_groups")) {
    cfg.batch_groups = static_cast<int>(get_int(kv, path, "batch_groups"));
    check("batch_groups", cfg.batch_groups >= 1, "must be >= 1");
  }
  if (kv.has("inner_epochs")) {
    cfg.inner_epochs = static_cast<int>(get_int(kv, path, "inner_epochs"));
    check("inner_epochs", cfg.inner_epochs >= 1, "must be >= 1");
  }
  if (kv.has("epsilon")) {
    cfg.clip.epsilon = get_double(kv, path, "epsilon");
    check("epsilon", cfg.clip.epsilon > 0.0, "must be > 0");
  }
  if (kv.has("beta")) {
    cfg.clip.beta = get_double(kv, path, "beta");
    check("beta", cfg.clip.beta >= 0.0, "must be >= 0");
  }
  if (kv.has("gamma")) {
    cfg.gae.gamma = get_double(kv, path, "gamma");
    check("gamma", cfg.gae.gamma >= 0.0 && cfg.gae.gamma <= 1.0, "must be in [0,1]");
  }
  if (kv.has("lam")) {
    cfg.gae.lambda = get_double(kv, path, "lam");
    check("lam", cfg.gae.lambda >= 0.0 && cfg.gae.lambda <= 1.0, "must be in [0,1]");
  }
  if (kv.has("eps_std")) {
    cfg.eps_std = get_double(kv, path, "eps_std");
    check("eps_std", cfg.eps_std >= 0.0, "must be >= 0");
  }
  if (kv.has("noise_sigma")) {
    cfg.noise.sigma = get_double(kv, path, "noise_sigma");
    check("noise_sigma", cfg.noise.sigma >= 0.0, "must be >= 0");
  }
  if (kv.has("lr")) {
    cfg.lr.schedule.alpha0 = get_double(kv, path, "lr");
    check("lr", cfg.lr.schedule.alpha0 > 0.0, "must be > 0");
  }
  if (kv.has("lr_decay")) cfg.lr.decay = get_bool(kv, path, "lr_decay");
  if (kv.has("lr_tau")) {
    cfg.lr.schedule.tau = get_double(kv, path, "lr_tau");
    check("lr_tau", cfg.lr.schedule.tau > 0.0, "must be > 0");
  }
  if (kv.has("pass_k")) {
    cfg.pass_k = static_cast<int>(get_int(kv, path, "pass_k"));
    check("pass_k", cfg.pass_k >= 1, "must be >= 1");
  }
  if (kv.has("seed")) {
    cfg.seed = get_uint64(kv, path, "seed");
    parsed.seed_given = true;
  }
  return parsed;
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open manifest for writing: " + path);
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
  if (!out) throw std::runtime_error("manifest write failed: " + path);
}

}  // namespace capolab
