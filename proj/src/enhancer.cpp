#include "reprompt/enhancer.hpp"

#include <algorithm>
#include <cctype>

namespace reprompt {

// ---- the codebook ---------------------------------------------------------------

std::string codebook_category_str(CodebookCategoryName name) {
  switch (name) {
    case CodebookCategoryName::Specifics: return "Specifics";
    case CodebookCategoryName::OperationalizationPlan: return "Operationalization plan";
    case CodebookCategoryName::LocalizationScope: return "Localization/scope";
    case CodebookCategoryName::CodebaseContext: return "Codebase context";
    case CodebookCategoryName::UserIntent: return "User intent";
  }
  throw ValidationError("unknown codebook category");
}

namespace {

// Lowercase alphanumerics only: "Localization/Scope" -> "localizationscope".
std::string squash_name(std::string_view text) {
  std::string out;
  for (char c : text) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}

}  // namespace

CodebookCategoryName codebook_category_from_str(const std::string& name) {
  const std::string squashed = squash_name(name);
  if (squashed == "specifics") return CodebookCategoryName::Specifics;
  if (squashed == "operationalizationplan") return CodebookCategoryName::OperationalizationPlan;
  if (squashed == "localizationscope" || squashed == "localization" || squashed == "scope")
    return CodebookCategoryName::LocalizationScope;
  if (squashed == "codebasecontext") return CodebookCategoryName::CodebaseContext;
  if (squashed == "userintent") return CodebookCategoryName::UserIntent;
  throw ValidationError("unknown codebook category: " + name);
}

std::vector<CodebookCategory> default_codebook() {
  return {
      {CodebookCategoryName::Specifics,
       "Missing or under-specified specifications, for example, the prompt lacks value"
       " information"},
      {CodebookCategoryName::OperationalizationPlan,
       "Missing or under-specified information on what operations need to be performed or what"
       " functions need to be used, or what edge case handling is needed to get to the desired"
       " code edit"},
      {CodebookCategoryName::LocalizationScope,
       "Missing or under-specified localization or scope of the change"},
      {CodebookCategoryName::CodebaseContext,
       "Prompt itself did not provide the necessary background information for the model to be"
       " able to generate the desired code edits, including missing information about the"
       " broader system, existing codebase. Developers may have assumed that the model had all"
       " the necessary context."},
      {CodebookCategoryName::UserIntent,
       "Missing or under-specified user intent in the prompt; it is not clear what the"
       " developer's goal is or what type of code edit they want to achieve"},
  };
}

std::string codebook_rubric_text(const std::vector<CodebookCategory>& codebook) {
  std::string out = "| Code | Description |\n| --- | --- |\n";
  for (const CodebookCategory& category : codebook) {
    out += "| " + codebook_category_str(category.name) + " | " + category.description + " |\n";
  }
  return out;
}

// ---- section-anchored Markdown parsing -------------------------------------------------

namespace {

// Reduces a line to a comparable heading key: markdown/bold/numbering
// stripped, a trailing "(if ...)" qualifier dropped, lowercased with single
// spaces. Returns "" for lines that cannot be headings.
std::string heading_key(std::string_view line) {
  std::string text = trim(line);
  if (text.empty()) return "";

  std::size_t begin = 0;
  while (begin < text.size() && text[begin] == '#') ++begin;
  while (begin < text.size() && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  // numbered headings: "3. Create Improved Prompt:"
  std::size_t digits = begin;
  while (digits < text.size() && std::isdigit(static_cast<unsigned char>(text[digits]))) ++digits;
  if (digits > begin && digits < text.size() && (text[digits] == '.' || text[digits] == ')')) {
    begin = digits + 1;
  }
  std::size_t end = text.size();
  auto strip_ws_and = [&](char extra) {
    while (begin < end && (std::isspace(static_cast<unsigned char>(text[begin])) ||
                           text[begin] == extra))
      ++begin;
    while (end > begin && (std::isspace(static_cast<unsigned char>(text[end - 1])) ||
                           text[end - 1] == extra))
      --end;
  };
  strip_ws_and('*');
  strip_ws_and('_');

  std::string core = text.substr(begin, end - begin);
  // "(If Necessary)" / "(If needed)" qualifiers
  std::size_t paren = core.rfind('(');
  if (paren != std::string::npos && core.back() == ')') {
    std::string inside = to_lower(trim(core.substr(paren + 1, core.size() - paren - 2)));
    if (inside.rfind("if", 0) == 0) core = core.substr(0, paren);
  }
  core = trim(core);
  while (!core.empty() && (core.back() == ':' || core.back() == '*')) core.pop_back();
  return collapse_ws(to_lower(core));
}

struct Section {
  std::string key;                 // canonical section id
  std::vector<std::string> lines;  // body lines, verbatim
};

// Splits text into sections keyed by the alias table; lines before the first
// recognized heading are dropped (models often preface reports with prose).
std::vector<Section> split_sections(const std::string& text,
                                    const std::map<std::string, std::string>& aliases) {
  std::vector<Section> sections;
  for (const std::string& line : split(text, '\n')) {
    auto alias = aliases.find(heading_key(line));
    if (alias != aliases.end()) {
      sections.push_back(Section{alias->second, {}});
      continue;
    }
    if (!sections.empty()) sections.back().lines.push_back(line);
  }
  return sections;
}

std::string joined_body(const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& line : lines) {
    out += line;
    out.push_back('\n');
  }
  return trim(out);
}

bool is_bullet(const std::string& trimmed) {
  return !trimmed.empty() && (trimmed[0] == '-' || trimmed[0] == '*' || trimmed[0] == '+');
}

// Bullet items with hanging-indent continuation lines merged; a body without
// any bullet markers becomes a single item.
std::vector<std::string> bullet_items(const std::vector<std::string>& lines) {
  std::vector<std::string> items;
  bool saw_bullet = false;
  for (const std::string& raw : lines) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (is_bullet(line)) {
      saw_bullet = true;
      items.push_back(trim(line.substr(1)));
    } else if (saw_bullet && !items.empty()) {
      items.back() += " " + line;
    }
  }
  if (!saw_bullet) {
    std::string whole = joined_body(lines);
    if (!whole.empty()) items.push_back(collapse_ws(whole));
  }
  return items;
}

std::optional<long> first_integer(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && !std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == text.size()) return std::nullopt;
  long value = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    value = value * 10 + (text[i] - '0');
    ++i;
  }
  return value;
}

std::string raw_excerpt(const std::string& text) {
  constexpr std::size_t kLimit = 400;
  if (text.size() <= kLimit) return text;
  return text.substr(0, kLimit) + "...";
}

}  // namespace

// ---- error analysis ------------------------------------------------------------------------

ErrorAnalysis parse_error_analysis(const std::string& text) {
  static const std::map<std::string, std::string> kAliases = {
      {"diff analysis", "diff"},
      {"analyze differences", "diff"},
      {"analysis of differences", "diff"},
      {"missing specification", "missing"},
      {"missing specifications", "missing"},
      {"identify missing specification", "missing"},
      {"identify missing specifications", "missing"},
      {"improved prompt", "improved"},
      {"create improved prompt", "improved"},
      {"request for more information", "info"},
      {"request more information", "info"},
  };

  ErrorAnalysis analysis;
  analysis.raw = text;
  bool saw_diff = false;
  bool saw_missing = false;
  std::string improved;
  std::string info;

  for (const Section& section : split_sections(text, kAliases)) {
    if (section.key == "diff") {
      saw_diff = true;
      analysis.diff_analysis = joined_body(section.lines);
    } else if (section.key == "missing") {
      saw_missing = true;
      for (std::string& item : bullet_items(section.lines))
        analysis.missing_specs.push_back(std::move(item));
    } else if (section.key == "improved") {
      improved = joined_body(section.lines);
    } else if (section.key == "info") {
      info = joined_body(section.lines);
    }
  }

  if (!saw_diff || !saw_missing) {
    throw ParseError("analysis reply is missing a mandatory section (diff analysis or missing"
                     " specification):\n" +
                     raw_excerpt(text));
  }
  if (!improved.empty()) {
    analysis.improved_prompt = improved;
    if (!info.empty()) {
      analysis.warnings.push_back(
          "reply carried both an improved prompt and an information request; keeping the"
          " improved prompt");
    }
  } else if (!info.empty()) {
    analysis.info_request = info;
  } else {
    throw ParseError("analysis reply has neither an improved prompt nor an information"
                     " request:\n" +
                     raw_excerpt(text));
  }
  return analysis;
}

namespace {

std::string fence_diff_block(const EditDiff& diff) {
  std::string body = diff.raw_text;
  if (!body.empty() && body.back() != '\n') body.push_back('\n');
  return "```diff\n" + body + "```\n";
}

std::string region_label(const CodeRegion& region) {
  return region.file_id + ":" + std::to_string(region.start_line) + "-" +
         std::to_string(region.end_line);
}

// The shared request body: prompt, selection, current diff, and optionally a
// labeled reference diff (ground truth for analysis, target for the limit
// study).
std::string build_user_text(const std::string& prompt, const CodeRegion& selection,
                            const EditDiff& model_diff, const char* reference_label,
                            const EditDiff* reference) {
  std::string out = "Current Prompt:\n" + prompt +
                    "\n\nSelected Lines:\n" + region_label(selection) +
                    "\n\nCurrent Model Diff:\n" + fence_diff_block(model_diff);
  if (reference != nullptr) {
    out += "\n" + std::string(reference_label) + ":\n" + fence_diff_block(*reference);
  }
  return out;
}

}  // namespace

ErrorAnalysis analyze_error(const UnsatExample& example, ModelGateway& gateway,
                            const EnhancerConfig& config) {
  if (diff_is_empty(example.desired_diff))
    throw ValidationError("error analysis requires a non-empty desired edit: " + example.id);
  const PromptAsset& asset = config.library.get("error_analysis", config.analysis_version);
  std::string user = build_user_text(example.prompt.text, example.selection, example.model_diff,
                                     "Golden Response Diff", &example.desired_diff);
  std::string reply =
      gateway.complete(ModelRole::Analyze, asset.text, user, example.context, example.selection);
  return parse_error_analysis(reply);
}

FeasibilityReport run_feasibility(const std::vector<UnsatExample>& train,
                                  ModelGateway& gateway, const EnhancerConfig& config) {
  FeasibilityReport report;
  report.total = train.size();
  for (const UnsatExample& example : train) {
    try {
      ErrorAnalysis analysis = analyze_error(example, gateway, config);
      if (!analysis.improved_prompt.has_value()) {
        report.failed_ids.push_back(example.id);
        continue;
      }
      Prompt improved{*analysis.improved_prompt, "enhancer", 0};
      EditDiff candidate =
          gateway.generate_edit(improved, example.original_code, example.selection);
      if (gateway.replicates(example.original_code, candidate, example.desired_diff,
                             example.prompt.text, *analysis.improved_prompt)) {
        ++report.replicated;
      } else {
        report.failed_ids.push_back(example.id);
      }
    } catch (const Error&) {
      report.failed_ids.push_back(example.id);
    }
  }
  report.rate = report.total == 0
                    ? 0.0
                    : static_cast<double>(report.replicated) / static_cast<double>(report.total);
  return report;
}

// ---- enhancement ----------------------------------------------------------------------------

std::string selection_kind_str(SelectionKind kind) {
  switch (kind) {
    case SelectionKind::None: return "none";
    case SelectionKind::Single: return "single";
    case SelectionKind::SelfSelection: return "self-selection";
    case SelectionKind::Farthest: return "farthest";
    case SelectionKind::Llm: return "llm";
  }
  throw ValidationError("unknown selection kind");
}

SelectionKind selection_kind_from_str(const std::string& name) {
  const std::string squashed = squash_name(name);
  if (squashed == "none") return SelectionKind::None;
  if (squashed == "single") return SelectionKind::Single;
  if (squashed == "selfselection") return SelectionKind::SelfSelection;
  if (squashed == "farthest") return SelectionKind::Farthest;
  if (squashed == "llm") return SelectionKind::Llm;
  throw ValidationError("unknown selection strategy: " + name);
}

EnhanceInputs enhance_inputs_from(const UnsatExample& example) {
  EnhanceInputs inputs;
  inputs.prompt = example.prompt.text;
  inputs.context = example.context;
  inputs.selection = example.selection;
  inputs.model_diff = example.model_diff;
  return inputs;
}

EnhancementResult parse_enhancement(const std::string& text) {
  static const std::map<std::string, std::string> kAliases = {
      {"identified missing specifications", "identified"},
      {"identified missing specification", "identified"},
      {"identify missing specification", "identified"},
      {"identify missing specifications", "identified"},
      {"missing specifications", "identified"},
      {"missing specification", "identified"},
      {"improved prompts", "variants"},
      {"generate improved prompts", "variants"},
      {"improved prompt", "variants"},
      {"recommended prompt", "recommended"},
      {"recommend the best prompt", "recommended"},
      {"recommendation", "recommended"},
      {"request for more information", "info"},
      {"request more information", "info"},
  };

  EnhancementResult result;
  result.raw = text;
  std::string info;
  std::optional<long> recommended_number;

  for (const Section& section : split_sections(text, kAliases)) {
    if (section.key == "identified") {
      for (const std::string& item : bullet_items(section.lines)) {
        try {
          result.identified.insert(codebook_category_from_str(item));
        } catch (const ValidationError&) {
          result.warnings.push_back("unrecognized category in identified list: " + item);
        }
      }
    } else if (section.key == "variants") {
      for (const std::string& raw_line : section.lines) {
        std::string line = trim(raw_line);
        if (line.empty()) continue;
        std::size_t digits = 0;
        while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])))
          ++digits;
        bool numbered = digits > 0 && digits < line.size() &&
                        (line[digits] == '.' || line[digits] == ')');
        if (!numbered) {
          if (!result.variants.empty()) result.variants.back().text += " " + line;
          continue;
        }
        std::string rest = trim(line.substr(digits + 1));
        if (rest.empty() || rest[0] != '[') {
          result.warnings.push_back("variant without a [Category] tag skipped: " + line);
          continue;
        }
        std::size_t close = rest.find(']');
        if (close == std::string::npos) {
          result.warnings.push_back("variant without a [Category] tag skipped: " + line);
          continue;
        }
        std::string category_name = rest.substr(1, close - 1);
        std::string prompt_text = trim(rest.substr(close + 1));
        try {
          CodebookCategoryName category = codebook_category_from_str(category_name);
          result.variants.push_back(PromptVariant{category, prompt_text});
        } catch (const ValidationError&) {
          result.warnings.push_back("variant with unrecognized category skipped: " +
                                    category_name);
        }
      }
    } else if (section.key == "recommended") {
      recommended_number = first_integer(joined_body(section.lines));
    } else if (section.key == "info") {
      info = joined_body(section.lines);
    }
  }

  if (!result.variants.empty()) {
    if (!info.empty()) {
      result.warnings.push_back(
          "reply carried both variants and an information request; keeping the variants");
    }
    if (recommended_number.has_value()) {
      if (*recommended_number >= 1 &&
          static_cast<std::size_t>(*recommended_number) <= result.variants.size()) {
        result.recommended = static_cast<std::size_t>(*recommended_number - 1);
      } else {
        result.warnings.push_back("recommended index " + std::to_string(*recommended_number) +
                                  " is out of range; dropped");
      }
    }
  } else if (!info.empty()) {
    result.info_request = info;
  } else {
    throw ParseError("enhancement reply has neither prompt variants nor an information"
                     " request:\n" +
                     raw_excerpt(text));
  }
  return result;
}

std::string truncate_to_words(const std::string& text, std::size_t max_words) {
  if (word_count(text) <= max_words) return trim(text);

  // longest prefix that ends a sentence and stays within the budget
  std::string best;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    bool at_boundary = i + 1 == text.size() ||
                       std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (!at_boundary) continue;
    std::string prefix = trim(text.substr(0, i + 1));
    if (word_count(prefix) <= max_words && prefix.size() > best.size()) best = prefix;
  }
  if (!best.empty()) return best;

  // boundary-free text: hard cut
  std::string out;
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < text.size() && words < max_words) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    if (!out.empty()) out.push_back(' ');
    out.append(text, start, i - start);
    ++words;
  }
  return out;
}

namespace {

const char* kShortenSystem =
    "Shorten the following improved prompt so it stays under the word limit while keeping"
    " every concrete detail (names, values, lines). Reply with the shortened prompt only.";

const char* kChoiceSystem =
    "You are selecting the most promising improved prompt for a code edit. Reply with exactly"
    " one line: 'choice: <number of the best candidate>'.";

}  // namespace

EnhancementResult enhance(const EnhanceInputs& inputs, const SelectionStrategy& strategy,
                          ModelGateway& gateway, const EnhancerConfig& config, bool limit_mode) {
  if (inputs.target_edit.has_value() && !limit_mode)
    throw LeakError("a target edit may only be supplied to the limit study");
  if (limit_mode && !inputs.target_edit.has_value())
    throw ValidationError("the limit study requires a target edit");

  const PromptAsset& asset = config.library.get("autoprompter", config.autoprompter_version);
  std::string rubric =
      strategy.kind == SelectionKind::None ? "" : codebook_rubric_text(config.codebook);
  std::string system = render_prompt(asset.text, {{"rubric", rubric}});
  std::string user = build_user_text(inputs.prompt, inputs.selection, inputs.model_diff,
                                     "Desired Final Code Edit",
                                     limit_mode ? &*inputs.target_edit : nullptr);

  std::string reply =
      gateway.complete(ModelRole::Analyze, system, user, inputs.context, inputs.selection);
  EnhancementResult result = parse_enhancement(reply);

  for (std::size_t i = 0; i < result.variants.size(); ++i) {
    PromptVariant& variant = result.variants[i];
    if (word_count(variant.text) <= config.variant_word_limit) continue;
    std::string shortened = trim(gateway.complete(ModelRole::Analyze, kShortenSystem,
                                                  variant.text));
    if (!shortened.empty() && word_count(shortened) <= config.variant_word_limit) {
      variant.text = shortened;
      result.warnings.push_back("variant " + std::to_string(i + 1) +
                                " exceeded the word limit; shortened by re-ask");
    } else {
      variant.text = truncate_to_words(variant.text, config.variant_word_limit);
      result.warnings.push_back("variant " + std::to_string(i + 1) +
                                " exceeded the word limit; truncated at a sentence boundary");
    }
  }
  return result;
}

std::size_t select(const EnhancementResult& result, const std::vector<EditDiff>& candidate_diffs,
                   const EditDiff& original_diff, const SelectionStrategy& strategy,
                   ModelGateway& gateway, const std::string& original_prompt) {
  if (result.info_request.has_value() || result.variants.empty())
    throw StrategyError("enhancement produced no variants to select from");
  if (candidate_diffs.size() != result.variants.size())
    throw ValidationError("candidate diffs and variants differ in count");

  switch (strategy.kind) {
    case SelectionKind::None:
    case SelectionKind::Single:
      return 0;

    case SelectionKind::SelfSelection:
      if (!result.recommended.has_value())
        throw StrategyError("self-selection needs a recommendation, and the reply had none");
      return *result.recommended;

    case SelectionKind::Farthest: {
      std::size_t best = 0;
      double best_similarity = 2.0;
      for (std::size_t i = 0; i < candidate_diffs.size(); ++i) {
        double similarity = similarity_by_metric(strategy.distance_metric,
                                                 candidate_diffs[i].raw_text,
                                                 original_diff.raw_text);
        if (similarity < best_similarity) {
          best_similarity = similarity;
          best = i;
        }
      }
      return best;
    }

    case SelectionKind::Llm: {
      std::string user = "Original Prompt:\n" + original_prompt + "\n\nCandidates:\n";
      for (std::size_t i = 0; i < result.variants.size(); ++i) {
        user += std::to_string(i + 1) + ". " + result.variants[i].text + "\n";
      }
      user += "\nReply with exactly 'choice: <number>'.\n";
      std::string reply = gateway.complete(ModelRole::Judge, kChoiceSystem, user);
      std::optional<long> choice = first_integer(reply);
      if (!choice.has_value())
        throw StrategyError("judge reply contained no candidate number: " + raw_excerpt(reply));
      if (*choice < 1 || static_cast<std::size_t>(*choice) > result.variants.size())
        throw StrategyError("judge chose candidate " + std::to_string(*choice) +
                            " of " + std::to_string(result.variants.size()));
      return static_cast<std::size_t>(*choice - 1);
    }
  }
  throw ValidationError("unknown selection strategy");
}

// ---- codebook induction ----------------------------------------------------------------------

InducedCodebook induce_codebook(const std::vector<ErrorAnalysis>& analyses,
                                ModelGateway& gateway, const EnhancerConfig& config) {
  if (analyses.size() < config.induction_floor) {
    throw ValidationError("codebook induction needs at least " +
                          std::to_string(config.induction_floor) + " analyses, got " +
                          std::to_string(analyses.size()));
  }

  std::string user;
  for (std::size_t i = 0; i < analyses.size(); ++i) {
    user += std::to_string(i + 1) + ". " + collapse_ws(analyses[i].diff_analysis) + "\n";
    if (!analyses[i].missing_specs.empty()) {
      user += "   Missing: ";
      for (std::size_t j = 0; j < analyses[i].missing_specs.size(); ++j) {
        if (j > 0) user += "; ";
        user += collapse_ws(analyses[i].missing_specs[j]);
      }
      user += "\n";
    }
  }

  const PromptAsset& asset = config.library.get("codebook_induction", config.induction_version);
  std::string reply = gateway.complete(ModelRole::Analyze, asset.text, user);

  InducedCodebook codebook;
  codebook.raw = reply;
  std::map<std::string, std::size_t> by_name;
  bool saw_header = false;
  for (const std::string& raw_line : split(reply, '\n')) {
    std::string line = trim(raw_line);
    if (line.empty() || line[0] != '|') continue;
    std::vector<std::string> cells = split(line, '|');
    // split("| a | b |") → "", " a ", " b ", ""; keep the interior cells
    std::vector<std::string> values;
    for (std::size_t i = 1; i + 1 < cells.size(); ++i) values.push_back(trim(cells[i]));
    if (values.empty()) continue;
    bool separator = std::all_of(values.begin(), values.end(), [](const std::string& cell) {
      return !cell.empty() && cell.find_first_not_of("-: ") == std::string::npos;
    });
    if (separator) continue;
    if (values.size() < 2)
      throw ParseError("codebook table row needs two columns: " + line);
    if (!saw_header) {
      saw_header = true;  // first non-separator row labels the columns
      continue;
    }
    const std::string key = squash_name(values[0]);
    auto existing = by_name.find(key);
    if (existing != by_name.end()) {
      codebook.entries[existing->second].description += "; " + values[1];
      codebook.warnings.push_back("duplicate category merged: " +
                                  codebook.entries[existing->second].name);
    } else {
      by_name.emplace(key, codebook.entries.size());
      codebook.entries.push_back(InducedCategory{values[0], values[1]});
    }
  }
  if (codebook.entries.empty())
    throw ParseError("codebook reply contained no table rows:\n" + raw_excerpt(reply));
  return codebook;
}

}  // namespace reprompt
