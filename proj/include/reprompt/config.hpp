#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reprompt/evaluator.hpp"
#include "reprompt/gateway.hpp"
#include "reprompt/metrics.hpp"

namespace reprompt {

// Effective settings for a pipeline run. Every field has a working default,
// can be set from a config file, and can be overridden by a flag; the whole
// struct is embedded in report artifacts for provenance.
struct RunConfig {
  // mining
  std::int64_t window_s = 600;
  int max_line_gap = 3;
  // dataset construction
  std::int64_t horizon_s = 1800;
  std::size_t diff_len_max = 10000;
  double train_fraction = 0.7;
  // metrics
  ChrfConfig chrf;
  // enhancement and evaluation
  std::vector<std::string> strategies;  // empty means all rows
  ScoreOn score_on = ScoreOn::Applied;
  // model backend
  GatewayMode backend_mode = GatewayMode::Replay;
  std::string endpoint;    // empty defers to MODEL_ENDPOINT
  std::string cache_path;  // record/replay cache file
  std::string prompt_dir;  // optional prompt asset overrides
  int parallelism = 4;
  int max_attempts = 3;
  int backoff_ms = 250;
  std::uint64_t seed = 0;
};

// Lists the recognized keys (kebab-case, identical in files and flags).
const std::vector<std::string>& config_keys();

// Applies one key=value pair. Unknown keys and malformed values throw
// ValidationError.
void apply_config_override(RunConfig& config, const std::string& key, const std::string& value);

// Parses `key = value` lines; '#' starts a comment line and blank lines are
// skipped. Errors name the offending line. Parsed values layer on top of
// `base`.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});

RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Bounds checks across fields; parse and override call this last, but flag
// plumbing may mutate the struct directly and re-validate.
void validate_config(const RunConfig& config);

// Deterministic JSON object of the effective configuration.
std::string config_to_json(const RunConfig& config);

}  // namespace reprompt
