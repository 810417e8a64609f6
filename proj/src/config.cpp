#include "reprompt/config.hpp"

#include <cstddef>
#include <stdexcept>

#include <json.hpp>

namespace reprompt {

namespace {

long long parse_integer(const std::string& key, const std::string& value) {
  std::size_t consumed = 0;
  long long parsed = 0;
  try {
    parsed = std::stoll(value, &consumed);
  } catch (const std::exception&) {
    throw ValidationError(key + " needs an integer, got '" + value + "'");
  }
  if (consumed != value.size())
    throw ValidationError(key + " needs an integer, got '" + value + "'");
  return parsed;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t consumed = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &consumed);
  } catch (const std::exception&) {
    throw ValidationError(key + " needs a number, got '" + value + "'");
  }
  if (consumed != value.size())
    throw ValidationError(key + " needs a number, got '" + value + "'");
  return parsed;
}

std::vector<std::string> parse_strategies(const std::string& value) {
  std::vector<std::string> labels;
  for (const std::string& piece : split(value, ',')) {
    std::string label = trim(piece);
    if (label.empty()) continue;
    validate_strategy_label(label);
    labels.push_back(label);
  }
  return labels;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> kKeys = {
      "window-s",      "max-line-gap", "horizon-s",    "diff-len-max", "train-fraction",
      "chrf-max-ngram", "chrf-beta",   "strategies",   "score-on",     "backend-mode",
      "endpoint",      "cache-path",   "prompt-dir",   "parallelism",  "max-attempts",
      "backoff-ms",    "seed"};
  return kKeys;
}

void apply_config_override(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "window-s") {
    config.window_s = parse_integer(key, value);
  } else if (key == "max-line-gap") {
    config.max_line_gap = static_cast<int>(parse_integer(key, value));
  } else if (key == "horizon-s") {
    config.horizon_s = parse_integer(key, value);
  } else if (key == "diff-len-max") {
    long long parsed = parse_integer(key, value);
    if (parsed < 0) throw ValidationError("diff-len-max cannot be negative");
    config.diff_len_max = static_cast<std::size_t>(parsed);
  } else if (key == "train-fraction") {
    config.train_fraction = parse_real(key, value);
  } else if (key == "chrf-max-ngram") {
    config.chrf.max_ngram = static_cast<int>(parse_integer(key, value));
  } else if (key == "chrf-beta") {
    config.chrf.beta = parse_real(key, value);
  } else if (key == "strategies") {
    config.strategies = parse_strategies(value);
  } else if (key == "score-on") {
    config.score_on = score_on_from_str(value);
  } else if (key == "backend-mode") {
    config.backend_mode = gateway_mode_from_str(value);
  } else if (key == "endpoint") {
    config.endpoint = value;
  } else if (key == "cache-path") {
    config.cache_path = value;
  } else if (key == "prompt-dir") {
    config.prompt_dir = value;
  } else if (key == "parallelism") {
    config.parallelism = static_cast<int>(parse_integer(key, value));
  } else if (key == "max-attempts") {
    config.max_attempts = static_cast<int>(parse_integer(key, value));
  } else if (key == "backoff-ms") {
    config.backoff_ms = static_cast<int>(parse_integer(key, value));
  } else if (key == "seed") {
    long long parsed = parse_integer(key, value);
    if (parsed < 0) throw ValidationError("seed cannot be negative");
    config.seed = static_cast<std::uint64_t>(parsed);
  } else {
    throw ValidationError("unknown configuration key: " + key);
  }
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::size_t line_number = 0;
  for (const std::string& raw_line : split(text, '\n')) {
    ++line_number;
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(line_number) +
                            ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_override(base, key, value);
    } catch (const Error& e) {
      throw ValidationError("line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  validate_config(base);
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw IoError("cannot read config " + path.string() + ": " + e.what());
  }
  try {
    return parse_config_text(text, std::move(base));
  } catch (const Error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void validate_config(const RunConfig& config) {
  if (config.window_s <= 0) throw ValidationError("window-s must be positive");
  if (config.max_line_gap < 0) throw ValidationError("max-line-gap cannot be negative");
  if (config.horizon_s <= 0) throw ValidationError("horizon-s must be positive");
  if (config.diff_len_max == 0) throw ValidationError("diff-len-max must be positive");
  if (!(config.train_fraction > 0.0) || !(config.train_fraction < 1.0))
    throw ValidationError("train-fraction must lie strictly between 0 and 1");
  if (config.chrf.max_ngram < 1) throw ValidationError("chrf-max-ngram must be at least 1");
  if (!(config.chrf.beta > 0.0)) throw ValidationError("chrf-beta must be positive");
  if (config.parallelism < 1) throw ValidationError("parallelism must be at least 1");
  if (config.max_attempts < 1) throw ValidationError("max-attempts must be at least 1");
  if (config.backoff_ms < 0) throw ValidationError("backoff-ms cannot be negative");
  for (const std::string& label : config.strategies) validate_strategy_label(label);
}

std::string config_to_json(const RunConfig& config) {
  nlohmann::json object = {
      {"window-s", config.window_s},
      {"max-line-gap", config.max_line_gap},
      {"horizon-s", config.horizon_s},
      {"diff-len-max", config.diff_len_max},
      {"train-fraction", config.train_fraction},
      {"chrf-max-ngram", config.chrf.max_ngram},
      {"chrf-beta", config.chrf.beta},
      {"strategies", config.strategies},
      {"score-on", score_on_str(config.score_on)},
      {"backend-mode", gateway_mode_str(config.backend_mode)},
      {"endpoint", config.endpoint},
      {"cache-path", config.cache_path},
      {"prompt-dir", config.prompt_dir},
      {"parallelism", config.parallelism},
      {"max-attempts", config.max_attempts},
      {"backoff-ms", config.backoff_ms},
      {"seed", config.seed},
  };
  return object.dump();
}

}  // namespace reprompt
