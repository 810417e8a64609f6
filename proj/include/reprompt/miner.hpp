#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reprompt/core.hpp"

namespace reprompt {

// ---- telemetry types --------------------------------------------------------------

enum class EventKind { Type, Delete, Paste, Cut, TransformRequest, Accept, Reject, Other };

std::string event_kind_str(EventKind kind);
EventKind event_kind_from_str(const std::string& name);  // throws ValidationError

struct TelemetryEvent {
  std::int64_t ts = 0;  // UTC seconds
  std::string user_id;
  EventKind kind = EventKind::Other;
  std::optional<CodeRegion> region;
  std::optional<std::string> interaction_id;
};

enum class Verdict { Accepted, Rejected, None };

std::string verdict_str(Verdict verdict);
Verdict verdict_from_str(const std::string& name);

// One in-IDE code transformation request with its outcome. The prompt's
// author_id is the interaction's user.
struct TransformInteraction {
  std::string interaction_id;
  Prompt prompt;
  CodeRegion region;
  std::string context;
  EditDiff generated_diff;
  Verdict verdict = Verdict::None;
  std::int64_t request_ts = 0;
  std::int64_t verdict_ts = 0;
};

// ---- re-prompt detection ------------------------------------------------------------

enum class RepromptClass { Identical, Tweaked, Unrelated };

std::string reprompt_class_str(RepromptClass cls);

struct RepromptPair {
  TransformInteraction first;
  TransformInteraction second;
  RepromptClass classification = RepromptClass::Unrelated;
  std::size_t edit_distance = 0;
  double normalized_distance = 0.0;
};

// Streaming detector over consecutive same-user requests. Chunks must arrive
// in chronological order per user; feeding everything at once and feeding
// chronological chunks produce identical pairs.
class RepromptDetector {
 public:
  explicit RepromptDetector(std::int64_t window_s = 600, int max_line_gap = 3);

  void feed(const std::vector<TransformInteraction>& chunk);
  const std::vector<RepromptPair>& pairs() const { return pairs_; }
  std::vector<RepromptPair> take_pairs() { return std::move(pairs_); }

 private:
  std::int64_t window_s_;
  int max_line_gap_;
  std::map<std::string, TransformInteraction> last_by_user_;
  std::vector<RepromptPair> pairs_;
};

// Sorts by (request_ts, interaction_id) and runs the detector. A pair is a
// re-prompt when the second request lands within window_s seconds of the
// first and the regions sit within max_line_gap lines in the same file.
// Identity is exact prompt equality after trailing-whitespace trim.
std::vector<RepromptPair> detect_reprompts(std::vector<TransformInteraction> interactions,
                                           std::int64_t window_s = 600, int max_line_gap = 3);

struct RepromptStats {
  std::size_t pair_count = 0;
  std::size_t identical_count = 0;
  double identical_rate = 0.0;
  // Histograms cover tweaked pairs only.
  std::map<std::size_t, std::size_t> distance_histogram;
  std::vector<std::size_t> normalized_histogram;  // 20 bins of width 0.05
};

RepromptStats reprompt_stats(const std::vector<RepromptPair>& pairs);

// ---- transition graphs ---------------------------------------------------------------

enum class Anchor { AfterAccept, AfterReject };

std::string anchor_str(Anchor anchor);

// Raw tallies, mergeable across user shards.
struct TransitionCounts {
  std::size_t anchor_count = 0;      // verdicts of the anchor type seen
  std::size_t attributed_count = 0;  // anchors with a first action in the window
  std::map<EventKind, std::size_t> first_counts;
  std::map<std::pair<EventKind, EventKind>, std::size_t> second_counts;

  void merge(const TransitionCounts& other);
};

// What developers do right after a verdict. first_action holds proportions
// over attributed anchors (sums to 1 when any anchor was attributed);
// second_action[(k1, k2)] is conditional on the first action being k1.
struct TransitionGraph {
  Anchor anchor = Anchor::AfterReject;
  std::size_t anchor_count = 0;
  std::size_t attributed_count = 0;
  std::map<EventKind, double> first_action;
  std::map<std::pair<EventKind, EventKind>, double> second_action;
  std::map<EventKind, std::size_t> first_counts;
  std::map<std::pair<EventKind, EventKind>, std::size_t> second_counts;
};

// Counts subsequent same-user actions within window_s of each matching
// verdict. An event with a region qualifies when it sits within
// max_line_gap lines of the interaction's region; events without a region
// count under Other. Accept/Reject events are outcomes, not actions, and
// never qualify. The second action only exists once a first action passed
// the gates.
TransitionCounts transition_counts(const std::vector<TelemetryEvent>& events,
                                   const std::vector<TransformInteraction>& interactions,
                                   Anchor anchor, std::int64_t window_s = 600,
                                   int max_line_gap = 3);

TransitionGraph finalize_graph(const TransitionCounts& counts, Anchor anchor);

TransitionGraph transition_graph(const std::vector<TelemetryEvent>& events,
                                 const std::vector<TransformInteraction>& interactions,
                                 Anchor anchor, std::int64_t window_s = 600,
                                 int max_line_gap = 3);

// Drops edges whose proportion is strictly below the threshold; edges at the
// threshold survive. Nothing is renormalized.
TransitionGraph prune_graph(const TransitionGraph& graph, double first_min = 0.03,
                            double second_min = 0.10);

std::string graph_to_dot(const TransitionGraph& graph);

// ---- synthetic log generation ----------------------------------------------------------

// Generator spec. Rates are fractions of consecutive same-user request
// pairs planted as identical/tweaked re-prompts (the remainder are spaced
// outside the detection gates). Mixes plant the first in-IDE action after
// each verdict; a TransformRequest entry is realized as the next request
// arriving inside the gates, so its share cannot exceed the gated-pair
// fraction.
struct SynthSpec {
  std::size_t users = 0;
  std::size_t interactions_per_user = 0;
  double identical_rate = 0.0;
  double tweak_rate = 0.0;
  double accept_rate = 0.5;
  std::map<EventKind, double> accept_mix;
  std::map<EventKind, double> reject_mix;
};

struct PlantedPair {
  std::string first_id;
  std::string second_id;
  RepromptClass classification = RepromptClass::Identical;
};

struct SynthResult {
  std::vector<TelemetryEvent> events;
  std::vector<TransformInteraction> interactions;
  std::vector<PlantedPair> planted_pairs;
  std::map<EventKind, std::size_t> planted_accept_first;
  std::map<EventKind, std::size_t> planted_reject_first;
};

// Deterministic for a fixed (spec, seed). Planted quantities are allocated
// by exact counts, so the miner recovers them exactly. Throws
// ValidationError on inconsistent specs.
SynthResult synthesize_logs(const SynthSpec& spec, std::uint64_t seed);

// ---- JSONL I/O ------------------------------------------------------------------------

std::vector<TelemetryEvent> load_events(const std::filesystem::path& path);
void save_events(const std::filesystem::path& path, const std::vector<TelemetryEvent>& events);

std::vector<TransformInteraction> load_interactions(const std::filesystem::path& path);
void save_interactions(const std::filesystem::path& path,
                       const std::vector<TransformInteraction>& interactions);

}  // namespace reprompt
