#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reprompt/dataset.hpp"
#include "reprompt/enhancer.hpp"
#include "reprompt/gateway.hpp"
#include "reprompt/metrics.hpp"

namespace reprompt {

// ---- strategy labels --------------------------------------------------------

// Report row order. Requested subsets keep this order regardless of how the
// request was phrased.
const std::vector<std::string>& canonical_strategy_labels();

void validate_strategy_label(const std::string& label);  // throws ValidationError

// ---- configuration ----------------------------------------------------------

// What text the chrf/gestalt columns compare: the file contents after
// applying each edit, or the raw diff strings. The autorater always judges
// the edits themselves.
enum class ScoreOn { Applied, Diff };

std::string score_on_str(ScoreOn mode);
ScoreOn score_on_from_str(const std::string& name);  // throws ValidationError

// When enabled, the desired edit joins the enhancement inputs — the upper
// bound study. Never enabled anywhere else.
struct LimitConfig {
  bool enabled = false;
};

struct EvalOptions {
  std::vector<std::string> strategies;  // empty means all canonical rows
  ChrfConfig chrf;
  ScoreOn score_on = ScoreOn::Applied;
  MetricName farthest_metric = MetricName::Gestalt;
  int parallelism = 4;
  std::uint64_t seed = 0;
  EnhancerConfig enhancer;
};

// ---- results ----------------------------------------------------------------

// One (example, strategy) cell. Failed cells keep their reason and are
// excluded from row means but never dropped from the report.
struct ExampleScores {
  std::string example_id;
  std::string strategy_label;
  double chrf = 0.0;
  double gestalt = 0.0;
  double autorater = 0.0;
  std::optional<double> manual;
  std::string chosen_prompt;
  bool failed = false;
  std::string failure_reason;
  std::vector<std::string> flags;  // e.g. "no-enhancement"
};

struct EvaluationRow {
  std::string strategy_label;
  double chrf = 0.0;
  double gestalt = 0.0;
  double autorater = 0.0;
  std::optional<double> manual;  // annotator-supplied, never model-generated
  std::size_t n = 0;             // examples contributing to the means
  std::size_t failed = 0;        // examples excluded from the means
};

struct RunMetadata {
  std::uint64_t seed = 0;
  std::string backend_id;
  std::string dataset_digest;
  std::string score_on;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;         // canonical strategy order
  std::vector<ExampleScores> per_example;  // strategy-major, example ids ascending
  RunMetadata run_metadata;
};

// Content digest over ids, prompts, code and diffs; stable across processes.
std::string dataset_digest(const std::vector<UnsatExample>& examples);

// ---- evaluation ---------------------------------------------------------------

// Runs one example under one strategy. "original" scores the stored model
// edit directly; "limit" runs the single strategy with the desired edit in
// the enhancement inputs. Gateway and pipeline failures mark the cell failed
// with the reason; configuration mistakes throw.
ExampleScores evaluate_example(const UnsatExample& example, const std::string& strategy_label,
                               ModelGateway& gw, LimitConfig limit = {},
                               const EvalOptions& options = {});

EvaluationReport evaluate_dataset(const std::vector<UnsatExample>& test, ModelGateway& gw,
                                  const EvalOptions& options = {});

// ---- manual labels -------------------------------------------------------------

// labels: example id -> {0, 0.5, 1} for the given strategy row. Every key
// must name an evaluated example; the row mean covers the labeled examples
// only, and an empty map leaves the column blank.
EvaluationReport import_manual_labels(EvaluationReport report, const std::string& strategy_label,
                                      const std::map<std::string, double>& labels);

// ---- rendering -----------------------------------------------------------------

std::string report_markdown(const EvaluationReport& report);
std::string report_csv(const EvaluationReport& report);
std::string per_example_jsonl(const EvaluationReport& report);

}  // namespace reprompt
