#include "reprompt/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reprompt/config.hpp"
#include "reprompt/dataset.hpp"
#include "reprompt/enhancer.hpp"
#include "reprompt/evaluator.hpp"
#include "reprompt/gateway.hpp"
#include "reprompt/miner.hpp"
#include "reprompt/prompts.hpp"

namespace reprompt {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- configuration plumbing ---------------------------------------------------

// Collects --config plus per-key override flags; resolution order is
// defaults, then the file, then flags, left to right.
struct ConfigCli {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_flags(CLI::App* cmd, ConfigCli& state) {
  cmd->add_option("--config", state.config_path,
                  "configuration file ('key = value' lines, '#' comments)");
  for (const std::string& key : config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [&state, key](const std::string& value) { state.overrides.emplace_back(key, value); },
        "override configuration key '" + key + "'");
  }
}

RunConfig resolve_config(const ConfigCli& state) {
  RunConfig config;
  if (!state.config_path.empty()) config = load_config(state.config_path);
  for (const auto& [key, value] : state.overrides) apply_config_override(config, key, value);
  validate_config(config);
  return config;
}

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value == nullptr ? std::string() : std::string(value);
}

ModelGateway make_gateway(const RunConfig& config) {
  GatewayConfig gateway_config;
  gateway_config.mode = config.backend_mode;
  gateway_config.cache_path = config.cache_path;
  gateway_config.max_attempts = config.max_attempts;
  gateway_config.backoff_ms = config.backoff_ms;
  gateway_config.parallelism = config.parallelism;

  std::string endpoint =
      config.endpoint.empty() ? env_or_empty("MODEL_ENDPOINT") : config.endpoint;
  if (gateway_config.mode != GatewayMode::Live && gateway_config.cache_path.empty())
    throw ValidationError(gateway_mode_str(gateway_config.mode) +
                          " mode needs a cache file: pass --cache-path");

  std::shared_ptr<ModelBackend> backend;
  if (gateway_config.mode == GatewayMode::Replay) {
    if (!endpoint.empty()) backend = make_backend(endpoint, env_or_empty("MODEL_KEY"));
  } else {
    if (endpoint.empty())
      throw ValidationError(gateway_mode_str(gateway_config.mode) +
                            " mode needs a model endpoint: pass --endpoint or set "
                            "MODEL_ENDPOINT");
    backend = make_backend(endpoint, env_or_empty("MODEL_KEY"));
  }
  return ModelGateway(std::move(backend), gateway_config);
}

EnhancerConfig enhancer_config_from(const RunConfig& config) {
  EnhancerConfig enhancer;
  if (!config.prompt_dir.empty())
    enhancer.library = PromptLibrary::with_overrides(config.prompt_dir);
  return enhancer;
}

// ---- provenance -----------------------------------------------------------------

std::string file_digest(const fs::path& path) { return sha256_hex(read_file(path)); }

// Digest over relative paths and contents of every regular file under root.
std::string dir_digest(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string blob;
  for (const fs::path& file : files) {
    blob += fs::relative(file, root).generic_string();
    blob += ':';
    blob += sha256_hex(read_file(file));
    blob += '\n';
  }
  return sha256_hex(blob);
}

json provenance(const RunConfig& config,
                const std::vector<std::pair<std::string, std::string>>& input_digests) {
  json inputs = json::object();
  for (const auto& [label, digest] : input_digests) inputs[label] = digest;
  return json{{"config", json::parse(config_to_json(config))}, {"inputs", inputs}};
}

std::string meta_line(const json& p) { return json{{"_meta", p}}.dump() + "\n"; }

void prepend_meta(const fs::path& path, const json& p) {
  write_file(path, meta_line(p) + read_file(path));
}

std::string markdown_comment(const json& p) { return "<!-- " + p.dump() + " -->\n"; }
std::string csv_comment(const json& p) { return "# " + p.dump() + "\n"; }
std::string dot_comment(const json& p) { return "// " + p.dump() + "\n"; }

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// ---- synth-logs -------------------------------------------------------------------

std::map<EventKind, double> parse_mix(const std::string& value) {
  std::map<EventKind, double> mix;
  for (const std::string& piece : split(value, ',')) {
    std::string entry = trim(piece);
    if (entry.empty()) continue;
    std::size_t colon = entry.find(':');
    if (colon == std::string::npos)
      throw ValidationError("mix entries look like 'Kind:share', got '" + entry + "'");
    EventKind kind = event_kind_from_str(trim(entry.substr(0, colon)));
    std::size_t consumed = 0;
    double share = 0.0;
    const std::string number = trim(entry.substr(colon + 1));
    try {
      share = std::stod(number, &consumed);
    } catch (const std::exception&) {
      throw ValidationError("mix share must be a number, got '" + number + "'");
    }
    if (consumed != number.size())
      throw ValidationError("mix share must be a number, got '" + number + "'");
    mix[kind] = share;
  }
  return mix;
}

SynthSpec parse_synth_spec(const std::string& text) {
  SynthSpec spec;
  std::size_t line_number = 0;
  for (const std::string& raw_line : split(text, '\n')) {
    ++line_number;
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("spec line " + std::to_string(line_number) +
                            ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "users") {
        spec.users = static_cast<std::size_t>(std::stoull(value));
      } else if (key == "interactions-per-user") {
        spec.interactions_per_user = static_cast<std::size_t>(std::stoull(value));
      } else if (key == "identical-rate") {
        spec.identical_rate = std::stod(value);
      } else if (key == "tweak-rate") {
        spec.tweak_rate = std::stod(value);
      } else if (key == "accept-rate") {
        spec.accept_rate = std::stod(value);
      } else if (key == "accept-mix") {
        spec.accept_mix = parse_mix(value);
      } else if (key == "reject-mix") {
        spec.reject_mix = parse_mix(value);
      } else {
        throw ValidationError("unknown spec key: " + key);
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw ValidationError("spec line " + std::to_string(line_number) + ": bad value '" +
                            value + "'");
    }
  }
  return spec;
}

struct SynthArgs {
  std::string spec_path;
  std::string out_dir;
  ConfigCli config;
};

int cmd_synth_logs(const SynthArgs& args) {
  RunConfig config = resolve_config(args.config);
  SynthSpec spec = parse_synth_spec(read_file(args.spec_path));
  SynthResult result = synthesize_logs(spec, config.seed);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  save_events(out_dir / "events.jsonl", result.events);
  save_interactions(out_dir / "interactions.jsonl", result.interactions);

  json p = provenance(config, {{"spec", file_digest(args.spec_path)}});
  prepend_meta(out_dir / "events.jsonl", p);
  prepend_meta(out_dir / "interactions.jsonl", p);

  json accept_first = json::object();
  for (const auto& [kind, count] : result.planted_accept_first)
    accept_first[event_kind_str(kind)] = count;
  json reject_first = json::object();
  for (const auto& [kind, count] : result.planted_reject_first)
    reject_first[event_kind_str(kind)] = count;
  std::size_t planted_identical = 0;
  for (const PlantedPair& pair : result.planted_pairs)
    if (pair.classification == RepromptClass::Identical) ++planted_identical;
  json summary = {
      {"provenance", p},
      {"events", result.events.size()},
      {"interactions", result.interactions.size()},
      {"planted_pairs", result.planted_pairs.size()},
      {"planted_identical", planted_identical},
      {"planted_accept_first", accept_first},
      {"planted_reject_first", reject_first},
  };
  write_file(out_dir / "synth_summary.json", summary.dump(2) + "\n");

  std::cout << "wrote " << result.events.size() << " events and " << result.interactions.size()
            << " interactions to " << args.out_dir << "\n";
  return 0;
}

// ---- mine ----------------------------------------------------------------------------

json graph_summary(const TransitionGraph& graph) {
  json first = json::object();
  for (const auto& [kind, share] : graph.first_action) first[event_kind_str(kind)] = share;
  json second = json::object();
  for (const auto& [pair, share] : graph.second_action)
    second[event_kind_str(pair.first) + "->" + event_kind_str(pair.second)] = share;
  return json{{"anchor", anchor_str(graph.anchor)},
              {"anchor_count", graph.anchor_count},
              {"attributed_count", graph.attributed_count},
              {"first_action", first},
              {"second_action", second}};
}

struct MineArgs {
  std::string events_path;
  std::string interactions_path;
  std::string out_dir;
  ConfigCli config;
};

int cmd_mine(const MineArgs& args) {
  RunConfig config = resolve_config(args.config);
  std::vector<TelemetryEvent> events = load_events(args.events_path);
  std::vector<TransformInteraction> interactions = load_interactions(args.interactions_path);

  std::vector<RepromptPair> pairs =
      detect_reprompts(interactions, config.window_s, config.max_line_gap);
  RepromptStats stats = reprompt_stats(pairs);
  TransitionGraph after_accept = transition_graph(events, interactions, Anchor::AfterAccept,
                                                  config.window_s, config.max_line_gap);
  TransitionGraph after_reject = transition_graph(events, interactions, Anchor::AfterReject,
                                                  config.window_s, config.max_line_gap);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  json p = provenance(config, {{"events", file_digest(args.events_path)},
                               {"interactions", file_digest(args.interactions_path)}});

  json distance_histogram = json::object();
  for (const auto& [distance, count] : stats.distance_histogram)
    distance_histogram[std::to_string(distance)] = count;
  json stats_json = {
      {"provenance", p},
      {"interactions", interactions.size()},
      {"pair_count", stats.pair_count},
      {"identical_count", stats.identical_count},
      {"identical_rate", stats.identical_rate},
      {"distance_histogram", distance_histogram},
      {"normalized_histogram", stats.normalized_histogram},
      {"after_accept", graph_summary(after_accept)},
      {"after_reject", graph_summary(after_reject)},
  };
  write_file(out_dir / "stats.json", stats_json.dump(2) + "\n");
  write_file(out_dir / "after_accept.dot", dot_comment(p) + graph_to_dot(prune_graph(after_accept)));
  write_file(out_dir / "after_reject.dot", dot_comment(p) + graph_to_dot(prune_graph(after_reject)));

  std::cout << "mined " << stats.pair_count << " re-prompt pairs (identical rate "
            << stats.identical_rate << ") from " << interactions.size() << " interactions\n";
  return 0;
}

// ---- build-dataset ---------------------------------------------------------------------

struct BuildDatasetArgs {
  std::string interactions_path;
  std::string snapshots_dir;
  std::string out_path;
  std::string report_path;
  std::string feedback_path;
  bool split = false;
  std::string train_out;
  std::string test_out;
  ConfigCli config;
};

int cmd_build_dataset(const BuildDatasetArgs& args) {
  RunConfig config = resolve_config(args.config);
  if (args.split && (args.train_out.empty() || args.test_out.empty()))
    throw ValidationError("--split needs both --train-out and --test-out");

  std::vector<TransformInteraction> interactions = load_interactions(args.interactions_path);
  SnapshotStore store = SnapshotStore::open(args.snapshots_dir);

  // the first request of each identical re-prompt pair is the
  // dissatisfaction signal we harvest
  std::vector<RepromptPair> pairs =
      detect_reprompts(interactions, config.window_s, config.max_line_gap);
  std::vector<CandidatePairing> candidates;
  std::set<std::string> harvested;
  for (const RepromptPair& pair : pairs) {
    if (pair.classification != RepromptClass::Identical) continue;
    if (!harvested.insert(pair.first.interaction_id).second) continue;
    candidates.push_back(make_candidate(pair.first, store, config.horizon_s));
  }

  FilterReport filter_report = filter_candidates(candidates, config.diff_len_max);
  std::vector<UnsatExample> examples = filter_report.kept;

  std::size_t feedback_count = 0;
  if (!args.feedback_path.empty()) {
    // user-submitted rewrites arrive curated and skip the filters
    std::vector<UnsatExample> feedback = load_examples(args.feedback_path);
    feedback_count = feedback.size();
    examples.insert(examples.end(), feedback.begin(), feedback.end());
  }
  std::set<std::string> ids;
  for (const UnsatExample& example : examples) {
    if (!ids.insert(example.id).second)
      throw ValidationError("duplicate example id after merge: " + example.id);
  }

  std::vector<std::pair<std::string, std::string>> inputs = {
      {"interactions", file_digest(args.interactions_path)},
      {"snapshots", dir_digest(args.snapshots_dir)}};
  if (!args.feedback_path.empty())
    inputs.emplace_back("feedback", file_digest(args.feedback_path));
  json p = provenance(config, inputs);

  ensure_parent(args.out_path);
  save_examples(args.out_path, examples);
  prepend_meta(args.out_path, p);

  std::string report_path = args.report_path;
  if (report_path.empty())
    report_path = (fs::path(args.out_path).parent_path() / "filter_report.json").string();
  json report_json = json::parse(filter_report_json(filter_report));
  report_json["provenance"] = p;
  ensure_parent(report_path);
  write_file(report_path, report_json.dump(2) + "\n");

  if (args.split) {
    auto [train, test] = split_dataset(examples, config.seed, config.train_fraction);
    ensure_parent(args.train_out);
    ensure_parent(args.test_out);
    save_examples(args.train_out, train);
    save_examples(args.test_out, test);
    prepend_meta(args.train_out, p);
    prepend_meta(args.test_out, p);
    std::cout << "split " << examples.size() << " examples into " << train.size()
              << " train / " << test.size() << " test\n";
  }

  std::cout << "kept " << filter_report.kept.size() << " of " << candidates.size()
            << " candidates";
  if (feedback_count > 0) std::cout << ", merged " << feedback_count << " feedback examples";
  std::cout << "; dataset at " << args.out_path << "\n";
  return 0;
}

// ---- enhance ------------------------------------------------------------------------------

struct EnhanceArgs {
  std::string dataset_path;
  std::string out_path;
  std::string strategy = "single";
  bool limit = false;
  ConfigCli config;
};

int cmd_enhance(const EnhanceArgs& args) {
  RunConfig config = resolve_config(args.config);
  SelectionStrategy strategy{selection_kind_from_str(args.strategy), MetricName::Gestalt};
  std::vector<UnsatExample> examples = load_examples(args.dataset_path);
  ModelGateway gateway = make_gateway(config);
  EnhancerConfig enhancer = enhancer_config_from(config);

  std::string body;
  std::size_t failed = 0;
  for (const UnsatExample& example : examples) {
    json record;
    record["example_id"] = example.id;
    try {
      EnhanceInputs inputs = enhance_inputs_from(example);
      if (args.limit) inputs.target_edit = example.desired_diff;
      EnhancementResult result = enhance(inputs, strategy, gateway, enhancer, args.limit);
      json identified = json::array();
      for (CodebookCategoryName category : result.identified)
        identified.push_back(codebook_category_str(category));
      json variants = json::array();
      for (const PromptVariant& variant : result.variants) {
        variants.push_back(json{{"category", codebook_category_str(variant.category)},
                                {"text", variant.text}});
      }
      record["identified"] = identified;
      record["variants"] = variants;
      record["recommended_index"] =
          result.recommended.has_value() ? json(*result.recommended) : json(nullptr);
      record["info_request"] =
          result.info_request.has_value() ? json(*result.info_request) : json(nullptr);
      record["warnings"] = result.warnings;
    } catch (const Error& e) {
      record["error"] = std::string(e.what());
      ++failed;
    }
    body += record.dump();
    body += '\n';
  }

  json p = provenance(config, {{"dataset", file_digest(args.dataset_path)}});
  ensure_parent(args.out_path);
  write_file(args.out_path, meta_line(p) + body);

  std::cout << "enhanced " << (examples.size() - failed) << " of " << examples.size()
            << " examples; output at " << args.out_path << "\n";
  if (failed > 0) {
    std::cerr << failed << " examples failed\n";
    return 1;
  }
  return 0;
}

// ---- evaluate ----------------------------------------------------------------------------

struct EvaluateArgs {
  std::string dataset_path;
  std::string out_dir;
  ConfigCli config;
};

int cmd_evaluate(const EvaluateArgs& args) {
  RunConfig config = resolve_config(args.config);
  std::vector<UnsatExample> examples = load_examples(args.dataset_path);
  ModelGateway gateway = make_gateway(config);

  EvalOptions options;
  options.strategies = config.strategies;
  options.chrf = config.chrf;
  options.score_on = config.score_on;
  options.parallelism = config.parallelism;
  options.seed = config.seed;
  options.enhancer = enhancer_config_from(config);

  EvaluationReport report = evaluate_dataset(examples, gateway, options);

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  json p = provenance(config, {{"dataset", file_digest(args.dataset_path)}});
  p["run"] = {{"seed", report.run_metadata.seed},
              {"backend", report.run_metadata.backend_id},
              {"dataset_digest", report.run_metadata.dataset_digest},
              {"score_on", report.run_metadata.score_on}};

  write_file(out_dir / "report.md", markdown_comment(p) + report_markdown(report));
  write_file(out_dir / "report.csv", csv_comment(p) + report_csv(report));
  write_file(out_dir / "per_example.jsonl", meta_line(p) + per_example_jsonl(report));

  std::size_t failed = 0;
  for (const EvaluationRow& row : report.rows) failed += row.failed;
  std::cout << "evaluated " << examples.size() << " examples across " << report.rows.size()
            << " strategies; report at " << (out_dir / "report.md").string() << "\n";
  if (failed > 0) {
    std::cerr << failed << " example evaluations failed\n";
    return 1;
  }
  return 0;
}

// ---- report -------------------------------------------------------------------------------

std::vector<ExampleScores> parse_per_example(const fs::path& path) {
  std::vector<ExampleScores> cells;
  std::size_t line_number = 0;
  for (const std::string& line : split(read_file(path), '\n')) {
    ++line_number;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) +
                       ": invalid JSON: " + e.what());
    }
    if (record.is_object() && record.contains("_meta")) continue;
    try {
      ExampleScores cell;
      cell.example_id = record.at("example_id").get<std::string>();
      cell.strategy_label = record.at("strategy").get<std::string>();
      validate_strategy_label(cell.strategy_label);
      cell.chrf = record.at("chrf").get<double>();
      cell.gestalt = record.at("gestalt").get<double>();
      cell.autorater = record.at("autorater").get<double>();
      cell.chosen_prompt = record.value("chosen_prompt", std::string());
      cell.failed = record.value("failed", false);
      cell.failure_reason = record.value("failure_reason", std::string());
      if (record.contains("flags")) cell.flags = record["flags"].get<std::vector<std::string>>();
      if (record.contains("manual") && !record["manual"].is_null())
        cell.manual = record["manual"].get<double>();
      cells.push_back(std::move(cell));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) +
                       ": bad record: " + e.what());
    } catch (const Error& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return cells;
}

// Rebuilds the aggregate rows from per-example cells (canonical strategy
// order, ids ascending, means over non-failed cells).
EvaluationReport rebuild_report(std::vector<ExampleScores> cells) {
  EvaluationReport report;
  for (const std::string& label : canonical_strategy_labels()) {
    std::vector<ExampleScores> mine;
    for (const ExampleScores& cell : cells)
      if (cell.strategy_label == label) mine.push_back(cell);
    if (mine.empty()) continue;
    std::sort(mine.begin(), mine.end(), [](const ExampleScores& a, const ExampleScores& b) {
      return a.example_id < b.example_id;
    });
    EvaluationRow row;
    row.strategy_label = label;
    double manual_sum = 0.0;
    std::size_t manual_count = 0;
    for (const ExampleScores& cell : mine) {
      if (cell.failed) {
        ++row.failed;
        continue;
      }
      row.chrf += cell.chrf;
      row.gestalt += cell.gestalt;
      row.autorater += cell.autorater;
      ++row.n;
      if (cell.manual.has_value()) {
        manual_sum += *cell.manual;
        ++manual_count;
      }
    }
    if (row.n > 0) {
      row.chrf /= static_cast<double>(row.n);
      row.gestalt /= static_cast<double>(row.n);
      row.autorater /= static_cast<double>(row.n);
    }
    if (manual_count > 0) row.manual = manual_sum / static_cast<double>(manual_count);
    report.rows.push_back(row);
    report.per_example.insert(report.per_example.end(), mine.begin(), mine.end());
  }
  if (report.rows.empty()) throw ValidationError("no per-example scores to report on");
  return report;
}

struct ReportArgs {
  std::string per_example_path;
  std::string out_dir;
  std::string manual_path;
  std::string manual_strategy;
  ConfigCli config;
};

int cmd_report(const ReportArgs& args) {
  RunConfig config = resolve_config(args.config);
  if (args.manual_path.empty() != args.manual_strategy.empty())
    throw ValidationError("--manual and --manual-strategy go together");

  EvaluationReport report = rebuild_report(parse_per_example(args.per_example_path));

  if (!args.manual_path.empty()) {
    json labels_json;
    try {
      labels_json = json::parse(read_file(args.manual_path));
    } catch (const json::exception& e) {
      throw ParseError(args.manual_path + ": invalid JSON: " + e.what());
    }
    if (!labels_json.is_object())
      throw ValidationError(args.manual_path + ": expected an object of example -> label");
    std::map<std::string, double> labels;
    for (const auto& [id, value] : labels_json.items()) {
      if (!value.is_number())
        throw ValidationError(args.manual_path + ": label for " + id + " must be a number");
      labels[id] = value.get<double>();
    }
    report = import_manual_labels(std::move(report), args.manual_strategy, labels);
  }

  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);
  json p = provenance(config, {{"per_example", file_digest(args.per_example_path)}});
  if (!args.manual_path.empty()) p["inputs"]["manual"] = file_digest(args.manual_path);

  write_file(out_dir / "report.md", markdown_comment(p) + report_markdown(report));
  write_file(out_dir / "report.csv", csv_comment(p) + report_csv(report));

  std::cout << "rendered " << report.rows.size() << " strategy rows to "
            << (out_dir / "report.md").string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"re-prompting telemetry miner, dataset builder and prompt enhancer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "reprompt 0.1.0");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth-logs", "generate synthetic IDE telemetry logs");
  synth->add_option("--spec", synth_args.spec_path, "generator spec file")->required();
  synth->add_option("--out-dir", synth_args.out_dir, "output directory")->required();
  add_config_flags(synth, synth_args.config);

  MineArgs mine_args;
  CLI::App* mine = app.add_subcommand("mine", "mine re-prompt signals and transition graphs");
  mine->add_option("--events", mine_args.events_path, "telemetry events JSONL")->required();
  mine->add_option("--interactions", mine_args.interactions_path, "interactions JSONL")
      ->required();
  mine->add_option("--out-dir", mine_args.out_dir, "output directory")->required();
  add_config_flags(mine, mine_args.config);

  BuildDatasetArgs build_args;
  CLI::App* build =
      app.add_subcommand("build-dataset", "harvest unsatisfactory examples into a dataset");
  build->add_option("--interactions", build_args.interactions_path, "interactions JSONL")
      ->required();
  build->add_option("--snapshots", build_args.snapshots_dir, "snapshot store directory")
      ->required();
  build->add_option("--out", build_args.out_path, "dataset JSONL output")->required();
  build->add_option("--report", build_args.report_path,
                    "filter report JSON output (default: filter_report.json next to --out)");
  build->add_option("--feedback", build_args.feedback_path,
                    "user-submitted examples JSONL merged without filtering");
  build->add_flag("--split", build_args.split, "also write a train/test split");
  build->add_option("--train-out", build_args.train_out, "train split output (with --split)");
  build->add_option("--test-out", build_args.test_out, "test split output (with --split)");
  add_config_flags(build, build_args.config);

  EnhanceArgs enhance_args;
  CLI::App* enhance_cmd =
      app.add_subcommand("enhance", "rewrite prompts for a dataset of examples");
  enhance_cmd->add_option("--dataset", enhance_args.dataset_path, "examples JSONL")->required();
  enhance_cmd->add_option("--out", enhance_args.out_path, "enhancements JSONL output")
      ->required();
  enhance_cmd->add_option("--strategy", enhance_args.strategy,
                          "selection strategy (none|single|self-selection|farthest|llm)");
  enhance_cmd->add_flag("--limit", enhance_args.limit,
                        "limit study: include the desired edit in the inputs");
  add_config_flags(enhance_cmd, enhance_args.config);

  EvaluateArgs evaluate_args;
  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "run the evaluation harness over a test set");
  evaluate_cmd->add_option("--dataset", evaluate_args.dataset_path, "examples JSONL")
      ->required();
  evaluate_cmd->add_option("--out-dir", evaluate_args.out_dir, "output directory")->required();
  add_config_flags(evaluate_cmd, evaluate_args.config);

  ReportArgs report_args;
  CLI::App* report_cmd =
      app.add_subcommand("report", "re-render reports from per-example scores");
  report_cmd->add_option("--per-example", report_args.per_example_path,
                         "per-example scores JSONL")
      ->required();
  report_cmd->add_option("--out-dir", report_args.out_dir, "output directory")->required();
  report_cmd->add_option("--manual", report_args.manual_path,
                         "manual labels JSON object (example id -> 0|0.5|1)");
  report_cmd->add_option("--manual-strategy", report_args.manual_strategy,
                         "strategy row the manual labels grade");
  add_config_flags(report_cmd, report_args.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);                                     // prints the usage error
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth_logs(synth_args);
    if (mine->parsed()) return cmd_mine(mine_args);
    if (build->parsed()) return cmd_build_dataset(build_args);
    if (enhance_cmd->parsed()) return cmd_enhance(enhance_args);
    if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate_args);
    if (report_cmd->parsed()) return cmd_report(report_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace reprompt
