#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reprompt/dataset.hpp"
#include "reprompt/gateway.hpp"
#include "reprompt/metrics.hpp"
#include "reprompt/prompts.hpp"

namespace reprompt {

// ---- the codebook --------------------------------------------------------------

// The five closed categories of missing prompt information used to tag
// enhancement variants.
enum class CodebookCategoryName {
  Specifics,
  OperationalizationPlan,
  LocalizationScope,
  CodebaseContext,
  UserIntent,
};

std::string codebook_category_str(CodebookCategoryName name);

// Tolerant of case, spacing and punctuation ("Localization/scope",
// "localization scope", "LOCALIZATION-SCOPE" all match). Throws
// ValidationError for anything else.
CodebookCategoryName codebook_category_from_str(const std::string& name);

struct CodebookCategory {
  CodebookCategoryName name = CodebookCategoryName::Specifics;
  std::string description;
};

// The five categories with their standard descriptions.
std::vector<CodebookCategory> default_codebook();

// Markdown rubric table rendered into the enhancement instruction's
// {{rubric}} slot.
std::string codebook_rubric_text(const std::vector<CodebookCategory>& codebook);

// ---- errors ------------------------------------------------------------------------

// The desired edit reached an enhancement request outside the limit study.
struct LeakError : Error {
  using Error::Error;
};

// A selection strategy could not produce an index (e.g. self-selection with
// no recommendation, or an unusable judge choice).
struct StrategyError : Error {
  using Error::Error;
};

// ---- error analysis (with ground truth) ------------------------------------------------

struct ErrorAnalysis {
  std::string diff_analysis;
  std::vector<std::string> missing_specs;
  std::optional<std::string> improved_prompt;
  std::optional<std::string> info_request;
  std::vector<std::string> warnings;
  std::string raw;
};

// Section-anchored parse of the analysis report (diff analysis, missing
// specification, improved prompt, information request). Exactly one of
// improved_prompt / info_request survives; when the reply carries both, the
// improved prompt wins and a warning records the drop. Missing mandatory
// sections raise ParseError carrying the raw reply.
ErrorAnalysis parse_error_analysis(const std::string& text);

struct EnhancerConfig {
  PromptLibrary library = PromptLibrary::embedded();
  std::vector<CodebookCategory> codebook = default_codebook();
  int analysis_version = 1;
  int autoprompter_version = 1;
  int induction_version = 1;
  std::size_t induction_floor = 10;  // minimum analyses for codebook induction
  std::size_t variant_word_limit = 50;
};

// Asks the model to compare the stored edit against the desired one and to
// propose an improved prompt. Requires a non-empty desired diff.
ErrorAnalysis analyze_error(const UnsatExample& example, ModelGateway& gateway,
                            const EnhancerConfig& config = {});

struct FeasibilityReport {
  std::size_t replicated = 0;
  std::size_t total = 0;
  double rate = 0.0;
  std::vector<std::string> failed_ids;  // input order; analysis or edit failures included
};

// For each training example: analyze the error, regenerate the edit from the
// improved prompt, and count replications under the gateway's rule.
FeasibilityReport run_feasibility(const std::vector<UnsatExample>& train,
                                  ModelGateway& gateway, const EnhancerConfig& config = {});

// ---- enhancement (without ground truth) ---------------------------------------------------

enum class SelectionKind { None, Single, SelfSelection, Farthest, Llm };

std::string selection_kind_str(SelectionKind kind);
SelectionKind selection_kind_from_str(const std::string& name);  // throws ValidationError

struct SelectionStrategy {
  SelectionKind kind = SelectionKind::Single;
  MetricName distance_metric = MetricName::Gestalt;  // used by farthest
};

struct PromptVariant {
  CodebookCategoryName category = CodebookCategoryName::Specifics;
  std::string text;
};

struct EnhancementResult {
  std::set<CodebookCategoryName> identified;
  std::vector<PromptVariant> variants;
  std::optional<std::size_t> recommended;  // index into variants
  std::optional<std::string> info_request;
  std::vector<std::string> warnings;
  std::string raw;
};

// The only fields an enhancement request may see. The desired edit has no
// slot here; it can enter solely as target_edit, which is legal only for the
// limit study.
struct EnhanceInputs {
  std::string prompt;
  std::string context;
  CodeRegion selection;
  EditDiff model_diff;
  std::optional<EditDiff> target_edit;
};

// Copies the four enhancement-legal fields; never the desired diff.
EnhanceInputs enhance_inputs_from(const UnsatExample& example);

// Parses the enhancement reply (identified categories, numbered
// [Category]-tagged variants, recommended index, information request).
// variants XOR info_request; violations degrade with warnings or raise
// ParseError when neither is present.
EnhancementResult parse_enhancement(const std::string& text);

// Runs the enhancement instruction over the inputs. A target_edit outside
// limit_mode raises LeakError; limit_mode without a target_edit raises
// ValidationError. Over-long variants are re-asked once and then truncated
// at a sentence boundary, with warnings.
EnhancementResult enhance(const EnhanceInputs& inputs, const SelectionStrategy& strategy,
                          ModelGateway& gateway, const EnhancerConfig& config = {},
                          bool limit_mode = false);

// Picks the variant index for the strategy. candidate_diffs[i] must be the
// edit generated from variants[i]. Throws StrategyError when the strategy
// cannot decide and ValidationError on shape mismatches.
std::size_t select(const EnhancementResult& result, const std::vector<EditDiff>& candidate_diffs,
                   const EditDiff& original_diff, const SelectionStrategy& strategy,
                   ModelGateway& gateway, const std::string& original_prompt);

// Truncates text at the last sentence boundary within max_words; falls back
// to a hard word cut for boundary-free text. Exposed for tests.
std::string truncate_to_words(const std::string& text, std::size_t max_words);

// ---- codebook induction -------------------------------------------------------------------

struct InducedCategory {
  std::string name;
  std::string description;
};

struct InducedCodebook {
  std::vector<InducedCategory> entries;
  std::vector<std::string> warnings;
  std::string raw;
};

// Open-codes a corpus of error analyses into a fresh category table.
// Requires at least config.induction_floor analyses; duplicate names are
// merged with concatenated descriptions and a warning.
InducedCodebook induce_codebook(const std::vector<ErrorAnalysis>& analyses,
                                ModelGateway& gateway, const EnhancerConfig& config = {});

}  // namespace reprompt
