#include "reprompt/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace reprompt {

using nlohmann::json;

std::string example_source_str(ExampleSource source) {
  return source == ExampleSource::UserFeedback ? "user_feedback" : "auto_extracted";
}

ExampleSource example_source_from_str(const std::string& name) {
  if (name == "user_feedback") return ExampleSource::UserFeedback;
  if (name == "auto_extracted") return ExampleSource::AutoExtracted;
  throw ValidationError("unknown example source: " + name);
}

// ---- pairing -------------------------------------------------------------------------

CandidatePairing make_candidate(const TransformInteraction& interaction,
                                const SnapshotStore& store, std::int64_t horizon_s) {
  if (horizon_s <= 0) throw ValidationError("horizon_s must be positive");
  CandidatePairing cand;
  UnsatExample& ex = cand.example;
  ex.id = interaction.interaction_id;
  ex.prompt = interaction.prompt;
  ex.context = interaction.context;
  ex.selection = interaction.region;
  ex.original_code = interaction.context;
  ex.model_diff = interaction.generated_diff;
  ex.source = ExampleSource::AutoExtracted;

  const auto future = store.first_at_or_after(interaction.region.file_id,
                                              interaction.request_ts + horizon_s);
  if (future) {
    ex.desired_diff = compute_diff(ex.original_code, future->content);
    cand.has_future = true;
  }
  return cand;
}

std::optional<UnsatExample> pair_with_future(const TransformInteraction& interaction,
                                             const SnapshotStore& store, std::int64_t horizon_s) {
  CandidatePairing cand = make_candidate(interaction, store, horizon_s);
  if (!cand.has_future) return std::nullopt;
  return std::move(cand.example);
}

// ---- filtering -----------------------------------------------------------------------

namespace {

bool has_change_lines(const EditDiff& diff) {
  for (const DiffHunk& hunk : diff.hunks) {
    for (const DiffLine& line : hunk.lines) {
      if (line.tag != LineTag::Context) return true;
    }
  }
  return false;
}

bool deletion_only(const EditDiff& diff) {
  bool deletes = false;
  for (const DiffHunk& hunk : diff.hunks) {
    for (const DiffLine& line : hunk.lines) {
      if (line.tag == LineTag::Added) return false;
      if (line.tag == LineTag::Deleted) deletes = true;
    }
  }
  return deletes;
}

bool same_effect(const UnsatExample& ex) {
  if (ex.model_diff.raw_text == ex.desired_diff.raw_text) return true;
  try {
    return apply_diff(ex.original_code, ex.model_diff) ==
           apply_diff(ex.original_code, ex.desired_diff);
  } catch (const Error&) {
    return false;  // an edit that does not apply cannot match the desired one
  }
}

}  // namespace

FilterReport filter_candidates(const std::vector<CandidatePairing>& candidates,
                               std::size_t max_diff_chars) {
  FilterReport report;
  for (const CandidatePairing& cand : candidates) {
    const UnsatExample& ex = cand.example;
    std::vector<std::string> tripped;
    if (diff_char_length(ex.model_diff) > max_diff_chars) {
      tripped.push_back(kFilterDiffTooLong);
    }
    if (!cand.has_future) {
      tripped.push_back(kFilterNoFutureSnapshot);
    } else {
      if (!has_change_lines(ex.desired_diff)) tripped.push_back(kFilterOriginalEqualsDesired);
      if (same_effect(ex)) tripped.push_back(kFilterModelEqualsDesired);
      if (diff_char_length(ex.desired_diff) > max_diff_chars &&
          tripped.end() == std::find(tripped.begin(), tripped.end(), kFilterDiffTooLong)) {
        tripped.push_back(kFilterDiffTooLong);
      }
      if (deletion_only(ex.desired_diff)) tripped.push_back(kFilterDeletionOnly);
    }
    if (tripped.empty()) {
      report.kept.push_back(ex);
    } else {
      for (const std::string& name : tripped) report.excluded[name].push_back(ex.id);
    }
  }
  for (auto& [name, ids] : report.excluded) std::sort(ids.begin(), ids.end());
  return report;
}

std::string filter_report_json(const FilterReport& report) {
  json j;
  j["kept_count"] = report.kept.size();
  json kept = json::array();
  for (const UnsatExample& ex : report.kept) kept.push_back(ex.id);
  j["kept"] = std::move(kept);
  json excluded = json::object();
  for (const auto& [name, ids] : report.excluded) excluded[name] = ids;
  j["excluded"] = std::move(excluded);
  return j.dump(2) + "\n";
}

// ---- curation ------------------------------------------------------------------------

std::pair<std::vector<UnsatExample>, std::vector<UnsatExample>> split_dataset(
    std::vector<UnsatExample> examples, std::uint64_t seed, double train_fraction) {
  if (examples.size() < 2) {
    throw ValidationError("splitting needs at least two examples");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction must be strictly between 0 and 1");
  }
  Rng rng(seed);
  rng.shuffle(examples);
  const auto train_size = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(examples.size())));
  std::vector<UnsatExample> train(examples.begin(),
                                  examples.begin() + static_cast<long>(train_size));
  std::vector<UnsatExample> test(examples.begin() + static_cast<long>(train_size),
                                 examples.end());
  return {std::move(train), std::move(test)};
}

std::vector<UnsatExample> apply_exclusion_tags(const std::vector<UnsatExample>& examples,
                                               const std::set<std::string>& tags) {
  std::vector<UnsatExample> kept;
  for (const UnsatExample& ex : examples) {
    const bool tagged = std::any_of(ex.annotations.begin(), ex.annotations.end(),
                                    [&](const auto& kv) { return tags.count(kv.first) > 0; });
    if (!tagged) kept.push_back(ex);
  }
  return kept;
}

// ---- JSONL I/O -------------------------------------------------------------------------

namespace {

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  const std::string content = read_file(path);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    ++line_no;
    std::string_view line(content.data() + start, end - start);
    if (!trim(line).empty()) {
      try {
        json parsed = json::parse(line);
        // artifact files may open with a provenance header line
        if (!(parsed.is_object() && parsed.contains("_meta"))) fn(parsed);
      } catch (const ParseError&) {
        throw;
      } catch (const json::exception& e) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": invalid JSON: " + e.what());
      } catch (const Error& e) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (end == content.size()) break;
    start = end + 1;
  }
}

}  // namespace

std::vector<UnsatExample> load_examples(const std::filesystem::path& path) {
  std::vector<UnsatExample> examples;
  std::set<std::string> seen;
  for_each_line(path, [&](const json& j) {
    const std::string version = j.value("schema_version", std::string(kExampleSchemaVersion));
    if (version != kExampleSchemaVersion) {
      throw ValidationError("unsupported schema_version: " + version);
    }
    UnsatExample ex;
    ex.id = j.at("id").get<std::string>();
    const json& p = j.at("prompt");
    ex.prompt.text = normalize_newlines(p.at("text").get<std::string>());
    ex.prompt.author_id = p.at("author").get<std::string>();
    ex.prompt.ts = p.value("ts", std::int64_t{0});
    validate_prompt(ex.prompt);
    ex.context = normalize_newlines(j.value("context", ""));
    const json& sel = j.at("selection");
    ex.selection = make_region(sel.at("file").get<std::string>(), sel.at("start_line").get<int>(),
                               sel.at("end_line").get<int>());
    ex.original_code = normalize_newlines(j.at("original_code").get<std::string>());
    ex.model_diff = parse_unified_diff(normalize_newlines(j.value("model_diff", "")));
    ex.desired_diff = parse_unified_diff(normalize_newlines(j.at("desired_diff").get<std::string>()));
    ex.source = example_source_from_str(j.value("source", "auto_extracted"));
    if (j.contains("annotations")) {
      for (const auto& [key, value] : j.at("annotations").items()) {
        ex.annotations[key] = value.get<std::string>();
      }
    }
    if (!seen.insert(ex.id).second) {
      throw ValidationError("duplicate example id: " + ex.id);
    }
    try {
      apply_diff(ex.original_code, ex.desired_diff);
    } catch (const Error& e) {
      throw ValidationError("desired edit does not apply to original_code: " +
                            std::string(e.what()));
    }
    examples.push_back(std::move(ex));
  });
  return examples;
}

void save_examples(const std::filesystem::path& path, const std::vector<UnsatExample>& examples) {
  std::string out;
  for (const UnsatExample& ex : examples) {
    json j{{"schema_version", kExampleSchemaVersion},
           {"id", ex.id},
           {"prompt", json{{"text", ex.prompt.text},
                           {"author", ex.prompt.author_id},
                           {"ts", ex.prompt.ts}}},
           {"context", ex.context},
           {"selection", json{{"file", ex.selection.file_id},
                              {"start_line", ex.selection.start_line},
                              {"end_line", ex.selection.end_line}}},
           {"original_code", ex.original_code},
           {"model_diff", ex.model_diff.raw_text},
           {"desired_diff", ex.desired_diff.raw_text},
           {"source", example_source_str(ex.source)}};
    if (!ex.annotations.empty()) {
      json ann = json::object();
      for (const auto& [key, value] : ex.annotations) ann[key] = value;
      j["annotations"] = std::move(ann);
    }
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

}  // namespace reprompt
