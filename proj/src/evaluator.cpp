#include "reprompt/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

namespace reprompt {

namespace {

constexpr char kNoEnhancementFlag[] = "no-enhancement";

SelectionKind kind_for_label(const std::string& label) {
  if (label == "none") return SelectionKind::None;
  if (label == "single" || label == "limit") return SelectionKind::Single;
  if (label == "self-selection") return SelectionKind::SelfSelection;
  if (label == "farthest") return SelectionKind::Farthest;
  if (label == "llm") return SelectionKind::Llm;
  throw ValidationError("strategy has no selection rule: " + label);
}

struct MetricTriple {
  double chrf = 0.0;
  double gestalt = 0.0;
  double autorater = 0.0;
};

// Scores a candidate edit against the example's desired edit. chrf/gestalt
// compare either the applied file texts or the raw diffs per options; the
// autorater judges the edits through the gateway.
MetricTriple score_candidate(const UnsatExample& example, const EditDiff& candidate,
                             const std::string& enhanced_prompt, ModelGateway& gw,
                             const EvalOptions& options) {
  std::string ours;
  std::string desired;
  if (options.score_on == ScoreOn::Applied) {
    ours = apply_diff(example.original_code, candidate);
    desired = apply_diff(example.original_code, example.desired_diff);
  } else {
    ours = candidate.raw_text;
    desired = example.desired_diff.raw_text;
  }
  MetricTriple scores;
  scores.chrf = similarity_by_metric(MetricName::Chrf, ours, desired, options.chrf);
  scores.gestalt = similarity_by_metric(MetricName::Gestalt, ours, desired);
  scores.autorater =
      gw.judge_similarity(example.prompt.text, enhanced_prompt, candidate, example.desired_diff)
          .value;
  return scores;
}

void assign(ExampleScores& cell, const MetricTriple& scores) {
  cell.chrf = scores.chrf;
  cell.gestalt = scores.gestalt;
  cell.autorater = scores.autorater;
}

std::vector<std::string> normalize_strategies(const std::vector<std::string>& requested) {
  if (requested.empty()) return canonical_strategy_labels();
  for (const std::string& label : requested) validate_strategy_label(label);
  std::vector<std::string> out;
  for (const std::string& canonical : canonical_strategy_labels()) {
    if (std::find(requested.begin(), requested.end(), canonical) != requested.end())
      out.push_back(canonical);
  }
  return out;
}

std::string fixed(double value, int places) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", places, value);
  return buf;
}

std::string optional_fixed(const std::optional<double>& value, int places) {
  return value.has_value() ? fixed(*value, places) : std::string();
}

}  // namespace

const std::vector<std::string>& canonical_strategy_labels() {
  static const std::vector<std::string> kLabels = {
      "original", "none", "single", "self-selection", "farthest", "llm", "limit"};
  return kLabels;
}

void validate_strategy_label(const std::string& label) {
  const std::vector<std::string>& known = canonical_strategy_labels();
  if (std::find(known.begin(), known.end(), label) == known.end())
    throw ValidationError("unknown strategy label: " + label);
}

std::string score_on_str(ScoreOn mode) {
  return mode == ScoreOn::Applied ? "applied" : "diff";
}

ScoreOn score_on_from_str(const std::string& name) {
  if (name == "applied") return ScoreOn::Applied;
  if (name == "diff") return ScoreOn::Diff;
  throw ValidationError("unknown score-on mode: " + name);
}

std::string dataset_digest(const std::vector<UnsatExample>& examples) {
  std::string blob;
  for (const UnsatExample& example : examples) {
    for (const std::string* part :
         {&example.id, &example.prompt.text, &example.context, &example.original_code,
          &example.model_diff.raw_text, &example.desired_diff.raw_text}) {
      blob += std::to_string(part->size());
      blob += ':';
      blob += *part;
    }
    blob += '|';
  }
  return sha256_hex(blob);
}

ExampleScores evaluate_example(const UnsatExample& example, const std::string& strategy_label,
                               ModelGateway& gw, LimitConfig limit, const EvalOptions& options) {
  validate_strategy_label(strategy_label);
  const bool limit_mode = limit.enabled || strategy_label == "limit";
  if (strategy_label == "original" && limit_mode)
    throw ValidationError("the original strategy cannot run as a limit study");

  ExampleScores cell;
  cell.example_id = example.id;
  cell.strategy_label = strategy_label;
  try {
    if (strategy_label == "original") {
      cell.chosen_prompt = example.prompt.text;
      assign(cell, score_candidate(example, example.model_diff, example.prompt.text, gw, options));
      return cell;
    }

    SelectionStrategy strategy{kind_for_label(strategy_label), options.farthest_metric};
    EnhanceInputs inputs = enhance_inputs_from(example);
    if (limit_mode) inputs.target_edit = example.desired_diff;
    EnhancementResult result = enhance(inputs, strategy, gw, options.enhancer, limit_mode);

    if (result.info_request.has_value()) {
      // The enhancer asked for clarification nobody can give in batch mode:
      // fall back to the unenhanced edit and say so.
      cell.chosen_prompt = example.prompt.text;
      cell.flags.push_back(kNoEnhancementFlag);
      assign(cell, score_candidate(example, example.model_diff, example.prompt.text, gw, options));
      return cell;
    }

    std::vector<EditDiff> candidates;
    candidates.reserve(result.variants.size());
    for (const PromptVariant& variant : result.variants) {
      candidates.push_back(gw.generate_edit(Prompt{variant.text, "enhancer", example.prompt.ts},
                                            example.original_code, example.selection));
    }
    std::size_t chosen =
        select(result, candidates, example.model_diff, strategy, gw, example.prompt.text);
    cell.chosen_prompt = result.variants[chosen].text;
    assign(cell, score_candidate(example, candidates[chosen], cell.chosen_prompt, gw, options));
    return cell;
  } catch (const Error& e) {
    cell.failed = true;
    cell.failure_reason = e.what();
    cell.chrf = cell.gestalt = cell.autorater = 0.0;
    return cell;
  }
}

EvaluationReport evaluate_dataset(const std::vector<UnsatExample>& test, ModelGateway& gw,
                                  const EvalOptions& options) {
  if (test.empty()) throw ValidationError("evaluation needs a non-empty test set");
  if (options.parallelism < 1) throw ValidationError("parallelism must be at least 1");
  std::set<std::string> seen_ids;
  for (const UnsatExample& example : test) {
    if (!seen_ids.insert(example.id).second)
      throw ValidationError("duplicate example id in test set: " + example.id);
  }
  const std::vector<std::string> labels = normalize_strategies(options.strategies);

  EvaluationReport report;
  report.run_metadata.seed = options.seed;
  report.run_metadata.backend_id = gw.backend_id();
  report.run_metadata.dataset_digest = dataset_digest(test);
  report.run_metadata.score_on = score_on_str(options.score_on);

  for (const std::string& label : labels) {
    std::vector<ExampleScores> cells(test.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= test.size()) break;
        try {
          cells[i] = evaluate_example(test[i], label, gw, LimitConfig{label == "limit"}, options);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!first_failure) first_failure = std::current_exception();
        }
      }
    };
    std::size_t thread_count =
        std::min<std::size_t>(static_cast<std::size_t>(options.parallelism), test.size());
    if (thread_count <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(thread_count);
      for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
      for (std::thread& thread : pool) thread.join();
    }
    if (first_failure) std::rethrow_exception(first_failure);

    // ordered reduction: example id order fixes both the mean and the report
    std::sort(cells.begin(), cells.end(),
              [](const ExampleScores& a, const ExampleScores& b) {
                return a.example_id < b.example_id;
              });
    EvaluationRow row;
    row.strategy_label = label;
    for (const ExampleScores& cell : cells) {
      if (cell.failed) {
        ++row.failed;
        continue;
      }
      row.chrf += cell.chrf;
      row.gestalt += cell.gestalt;
      row.autorater += cell.autorater;
      ++row.n;
    }
    if (row.n > 0) {
      row.chrf /= static_cast<double>(row.n);
      row.gestalt /= static_cast<double>(row.n);
      row.autorater /= static_cast<double>(row.n);
    }
    report.rows.push_back(row);
    report.per_example.insert(report.per_example.end(), cells.begin(), cells.end());
  }
  return report;
}

EvaluationReport import_manual_labels(EvaluationReport report, const std::string& strategy_label,
                                      const std::map<std::string, double>& labels) {
  validate_strategy_label(strategy_label);
  for (const auto& [id, value] : labels) {
    if (value != 0.0 && value != 0.5 && value != 1.0)
      throw ValidationError("manual label for " + id + " must be 0, 0.5 or 1, got " +
                            std::to_string(value));
  }
  std::map<std::string, ExampleScores*> cells;
  for (ExampleScores& cell : report.per_example) {
    if (cell.strategy_label == strategy_label) cells.emplace(cell.example_id, &cell);
  }
  if (cells.empty())
    throw ValidationError("no evaluated examples for strategy: " + strategy_label);
  for (const auto& [id, value] : labels) {
    (void)value;
    if (cells.find(id) == cells.end())
      throw ValidationError("manual label names an example outside the test set: " + id);
  }
  if (labels.empty()) return report;

  double sum = 0.0;
  for (const auto& [id, value] : labels) {
    cells.at(id)->manual = value;
    sum += value;
  }
  for (EvaluationRow& row : report.rows) {
    if (row.strategy_label == strategy_label)
      row.manual = sum / static_cast<double>(labels.size());
  }
  return report;
}

std::string report_markdown(const EvaluationReport& report) {
  std::string out;
  out += "| Strategy | ChrF | Gestalt | Autorater | Human | n | Failed |\n";
  out += "| --- | --- | --- | --- | --- | --- | --- |\n";
  for (const EvaluationRow& row : report.rows) {
    out += "| " + row.strategy_label;
    out += " | " + fixed(row.chrf, 3);
    out += " | " + fixed(row.gestalt, 3);
    out += " | " + fixed(row.autorater, 3);
    out += " | " + optional_fixed(row.manual, 3);
    out += " | " + std::to_string(row.n);
    out += " | " + std::to_string(row.failed);
    out += " |\n";
  }
  return out;
}

std::string report_csv(const EvaluationReport& report) {
  std::string out = "strategy,chrf,gestalt,autorater,manual,n,failed\n";
  for (const EvaluationRow& row : report.rows) {
    out += row.strategy_label;
    out += ',' + fixed(row.chrf, 6);
    out += ',' + fixed(row.gestalt, 6);
    out += ',' + fixed(row.autorater, 6);
    out += ',' + optional_fixed(row.manual, 6);
    out += ',' + std::to_string(row.n);
    out += ',' + std::to_string(row.failed);
    out += '\n';
  }
  return out;
}

std::string per_example_jsonl(const EvaluationReport& report) {
  std::string out;
  for (const ExampleScores& cell : report.per_example) {
    nlohmann::json record = {
        {"example_id", cell.example_id},
        {"strategy", cell.strategy_label},
        {"chrf", cell.chrf},
        {"gestalt", cell.gestalt},
        {"autorater", cell.autorater},
        {"chosen_prompt", cell.chosen_prompt},
        {"failed", cell.failed},
        {"failure_reason", cell.failure_reason},
        {"flags", cell.flags},
    };
    if (cell.manual.has_value())
      record["manual"] = *cell.manual;
    else
      record["manual"] = nullptr;
    out += record.dump();
    out += '\n';
  }
  return out;
}

}  // namespace reprompt
