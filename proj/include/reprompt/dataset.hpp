#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reprompt/core.hpp"
#include "reprompt/miner.hpp"

namespace reprompt {

// ---- example records -------------------------------------------------------------

enum class ExampleSource { UserFeedback, AutoExtracted };

std::string example_source_str(ExampleSource source);
ExampleSource example_source_from_str(const std::string& name);  // throws ValidationError

// One unsatisfactory code-edit interaction paired with the edit the
// developer actually wanted. desired_diff always applies cleanly to
// original_code.
struct UnsatExample {
  std::string id;
  Prompt prompt;
  std::string context;        // code context shown to the model
  CodeRegion selection;       // region the request targeted
  std::string original_code;  // code state the edits apply to
  EditDiff model_diff;        // the unsatisfactory suggestion
  EditDiff desired_diff;      // what the developer ended up with
  ExampleSource source = ExampleSource::AutoExtracted;
  std::map<std::string, std::string> annotations;  // reviewer tags -> notes
};

inline constexpr char kExampleSchemaVersion[] = "v1";
inline constexpr std::size_t kMaxDiffChars = 10000;
inline constexpr std::int64_t kDefaultHorizonS = 1800;

// ---- pairing with future snapshots --------------------------------------------------

// A candidate example plus whether a future snapshot existed at all;
// candidates without one are carried through so the filter report can
// account for them.
struct CandidatePairing {
  UnsatExample example;
  bool has_future = false;
};

// Builds the candidate for an unsatisfactory interaction. The desired edit
// is the diff from the interaction's context to the first snapshot of the
// file at or after request_ts + horizon_s.
CandidatePairing make_candidate(const TransformInteraction& interaction,
                                const SnapshotStore& store,
                                std::int64_t horizon_s = kDefaultHorizonS);

// make_candidate, collapsed to the paired example (none when no future
// snapshot exists).
std::optional<UnsatExample> pair_with_future(const TransformInteraction& interaction,
                                             const SnapshotStore& store,
                                             std::int64_t horizon_s = kDefaultHorizonS);

// ---- filtering -----------------------------------------------------------------------

inline constexpr char kFilterOriginalEqualsDesired[] = "original_equals_desired";
inline constexpr char kFilterModelEqualsDesired[] = "model_equals_desired";
inline constexpr char kFilterDiffTooLong[] = "diff_too_long";
inline constexpr char kFilterNoFutureSnapshot[] = "no_future_snapshot";
inline constexpr char kFilterDeletionOnly[] = "deletion_only";

// kept and excluded partition the candidates: an id is either kept or
// listed under every filter it tripped. Excluded id lists are sorted.
struct FilterReport {
  std::vector<UnsatExample> kept;
  std::map<std::string, std::vector<std::string>> excluded;
};

// Order-independent conjunction of the five exclusion heuristics:
// (1) original code equals desired code, (2) the model edit already matches
// the desired edit (textually or by effect), (3) either diff is longer than
// max_diff_chars, (4) no future snapshot existed, (5) the desired edit only
// deletes code. Heuristics that need the desired edit are skipped when no
// future snapshot exists.
FilterReport filter_candidates(const std::vector<CandidatePairing>& candidates,
                               std::size_t max_diff_chars = kMaxDiffChars);

// Deterministic JSON rendering of a report (kept ids plus exclusions).
std::string filter_report_json(const FilterReport& report);

// ---- curation ------------------------------------------------------------------------

// Deterministic shuffle-and-cut split. train gets round(n * train_fraction)
// examples, the remainder goes to test. Requires n >= 2 and
// 0 < train_fraction < 1.
std::pair<std::vector<UnsatExample>, std::vector<UnsatExample>> split_dataset(
    std::vector<UnsatExample> examples, std::uint64_t seed, double train_fraction = 0.7);

// Removes examples bearing any of the given annotation keys.
std::vector<UnsatExample> apply_exclusion_tags(const std::vector<UnsatExample>& examples,
                                               const std::set<std::string>& tags);

// ---- JSONL I/O -------------------------------------------------------------------------

// Loads examples, validating the schema version, id uniqueness, and that
// each desired edit applies cleanly to its original code. Errors name the
// offending file and line.
std::vector<UnsatExample> load_examples(const std::filesystem::path& path);
void save_examples(const std::filesystem::path& path, const std::vector<UnsatExample>& examples);

}  // namespace reprompt
