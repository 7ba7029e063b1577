#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "capolab/trainer.hpp"

namespace capolab {

// Config/env-file problem with the 1-based line it came from (0 = file-level).
struct ConfigError : std::runtime_error {
  int line;
  explicit ConfigError(const std::string& what, int line_no = 0)
      : std::runtime_error(what), line(line_no) {}
};

// Ordered key=value pairs from one file. '#' starts a comment, blank lines
// skipped, duplicate keys rejected, '=' required.
struct KeyValues {
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;

  bool has(const std::string& key) const { return values.count(key) > 0; }
};

KeyValues parse_key_values(const std::string& path);
KeyValues parse_key_values_text(const std::string& text, const std::string& origin);

// Environment description file:
//   env=bandit|chain
//   bandit: contexts, actions, reward_row.<c> (comma-separated, one per context)
//   chain:  contexts (tasks), actions, chain_length, optional flip_prob
Env parse_env_spec(const std::string& path);

// Full training config. `env_file` key points at the env spec (resolved
// relative to the config file's directory). Unknown keys are errors; `seed`
// is mandatory unless the caller overrides it. CLI overrides are applied
// by the frontend after parsing.
struct ParsedTrainConfig {
  TrainConfig train;
  bool seed_given = false;
  std::string env_path;
};

ParsedTrainConfig parse_train_config(const std::string& path);

// Writes the run manifest: resolved config key=value lines, artifact list,
// wall time, library version.
void write_manifest(const std::string& path, const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace capolab
