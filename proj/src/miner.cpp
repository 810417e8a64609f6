#include "reprompt/miner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "reprompt/metrics.hpp"

namespace reprompt {

using nlohmann::json;

// ---- enum names ---------------------------------------------------------------

std::string event_kind_str(EventKind kind) {
  switch (kind) {
    case EventKind::Type: return "Type";
    case EventKind::Delete: return "Delete";
    case EventKind::Paste: return "Paste";
    case EventKind::Cut: return "Cut";
    case EventKind::TransformRequest: return "TransformRequest";
    case EventKind::Accept: return "Accept";
    case EventKind::Reject: return "Reject";
    case EventKind::Other: return "Other";
  }
  return "Other";
}

EventKind event_kind_from_str(const std::string& name) {
  static const std::pair<const char*, EventKind> kTable[] = {
      {"Type", EventKind::Type},
      {"Delete", EventKind::Delete},
      {"Paste", EventKind::Paste},
      {"Cut", EventKind::Cut},
      {"TransformRequest", EventKind::TransformRequest},
      {"Accept", EventKind::Accept},
      {"Reject", EventKind::Reject},
      {"Other", EventKind::Other},
  };
  for (const auto& [str, kind] : kTable) {
    if (name == str) return kind;
  }
  throw ValidationError("unknown event kind: " + name);
}

std::string verdict_str(Verdict verdict) {
  switch (verdict) {
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
    case Verdict::None: return "none";
  }
  return "none";
}

Verdict verdict_from_str(const std::string& name) {
  if (name == "accepted") return Verdict::Accepted;
  if (name == "rejected") return Verdict::Rejected;
  if (name == "none") return Verdict::None;
  throw ValidationError("unknown verdict: " + name);
}

std::string reprompt_class_str(RepromptClass cls) {
  switch (cls) {
    case RepromptClass::Identical: return "identical";
    case RepromptClass::Tweaked: return "tweaked";
    case RepromptClass::Unrelated: return "unrelated";
  }
  return "unrelated";
}

std::string anchor_str(Anchor anchor) {
  return anchor == Anchor::AfterAccept ? "after_accept" : "after_reject";
}

// ---- re-prompt detection --------------------------------------------------------

RepromptDetector::RepromptDetector(std::int64_t window_s, int max_line_gap)
    : window_s_(window_s), max_line_gap_(max_line_gap) {
  if (window_s <= 0) throw ValidationError("window_s must be positive");
  if (max_line_gap < 0) throw ValidationError("max_line_gap must be >= 0");
}

void RepromptDetector::feed(const std::vector<TransformInteraction>& chunk) {
  for (const TransformInteraction& cur : chunk) {
    const std::string& user = cur.prompt.author_id;
    auto it = last_by_user_.find(user);
    if (it != last_by_user_.end()) {
      const TransformInteraction& prev = it->second;
      if (cur.request_ts < prev.request_ts) {
        throw ValidationError("interactions for user " + user +
                              " are not in chronological order");
      }
      const bool in_window = cur.request_ts - prev.request_ts <= window_s_;
      const std::optional<int> gap = region_line_gap(prev.region, cur.region);
      const bool near = gap.has_value() && *gap <= max_line_gap_;
      if (in_window && near) {
        RepromptPair pair;
        pair.first = prev;
        pair.second = cur;
        const std::string a = trim_trailing_ws(prev.prompt.text);
        const std::string b = trim_trailing_ws(cur.prompt.text);
        pair.edit_distance = levenshtein(a, b);
        pair.normalized_distance = normalized_levenshtein(a, b);
        pair.classification =
            pair.edit_distance == 0 ? RepromptClass::Identical : RepromptClass::Tweaked;
        pairs_.push_back(std::move(pair));
      }
    }
    last_by_user_.insert_or_assign(user, cur);
  }
}

std::vector<RepromptPair> detect_reprompts(std::vector<TransformInteraction> interactions,
                                           std::int64_t window_s, int max_line_gap) {
  std::sort(interactions.begin(), interactions.end(),
            [](const TransformInteraction& a, const TransformInteraction& b) {
              if (a.request_ts != b.request_ts) return a.request_ts < b.request_ts;
              return a.interaction_id < b.interaction_id;
            });
  RepromptDetector detector(window_s, max_line_gap);
  detector.feed(interactions);
  return detector.take_pairs();
}

RepromptStats reprompt_stats(const std::vector<RepromptPair>& pairs) {
  RepromptStats stats;
  stats.normalized_histogram.assign(20, 0);
  stats.pair_count = pairs.size();
  for (const RepromptPair& pair : pairs) {
    if (pair.classification == RepromptClass::Identical) {
      ++stats.identical_count;
    } else if (pair.classification == RepromptClass::Tweaked) {
      ++stats.distance_histogram[pair.edit_distance];
      const auto bin = std::min<std::size_t>(
          19, static_cast<std::size_t>(pair.normalized_distance * 20.0));
      ++stats.normalized_histogram[bin];
    }
  }
  stats.identical_rate =
      pairs.empty() ? 0.0
                    : static_cast<double>(stats.identical_count) /
                          static_cast<double>(stats.pair_count);
  return stats;
}

// ---- transition graphs -----------------------------------------------------------

void TransitionCounts::merge(const TransitionCounts& other) {
  anchor_count += other.anchor_count;
  attributed_count += other.attributed_count;
  for (const auto& [kind, n] : other.first_counts) first_counts[kind] += n;
  for (const auto& [edge, n] : other.second_counts) second_counts[edge] += n;
}

TransitionCounts transition_counts(const std::vector<TelemetryEvent>& events,
                                   const std::vector<TransformInteraction>& interactions,
                                   Anchor anchor, std::int64_t window_s, int max_line_gap) {
  if (window_s <= 0) throw ValidationError("window_s must be positive");
  const Verdict want = anchor == Anchor::AfterAccept ? Verdict::Accepted : Verdict::Rejected;

  std::map<std::string, std::vector<const TelemetryEvent*>> by_user;
  for (const TelemetryEvent& event : events) by_user[event.user_id].push_back(&event);
  for (auto& [user, list] : by_user) {
    std::stable_sort(list.begin(), list.end(),
                     [](const TelemetryEvent* a, const TelemetryEvent* b) { return a->ts < b->ts; });
  }

  TransitionCounts out;
  for (const TransformInteraction& interaction : interactions) {
    if (interaction.verdict != want) continue;
    ++out.anchor_count;
    auto user_it = by_user.find(interaction.prompt.author_id);
    if (user_it == by_user.end()) continue;
    const auto& list = user_it->second;

    auto begin = std::lower_bound(list.begin(), list.end(), interaction.verdict_ts,
                                  [](const TelemetryEvent* e, std::int64_t ts) { return e->ts < ts; });
    std::optional<EventKind> first;
    std::optional<EventKind> second;
    for (auto it = begin; it != list.end(); ++it) {
      const TelemetryEvent& event = **it;
      if (event.ts > interaction.verdict_ts + window_s) break;
      if (event.kind == EventKind::Accept || event.kind == EventKind::Reject) continue;
      if (event.interaction_id && *event.interaction_id == interaction.interaction_id) continue;
      EventKind counted;
      if (event.region) {
        const std::optional<int> gap = region_line_gap(*event.region, interaction.region);
        if (!gap.has_value() || *gap > max_line_gap) continue;
        counted = event.kind;
      } else {
        counted = EventKind::Other;
      }
      if (!first) {
        first = counted;
      } else {
        second = counted;
        break;
      }
    }
    if (first) {
      ++out.attributed_count;
      ++out.first_counts[*first];
      if (second) ++out.second_counts[{*first, *second}];
    }
  }
  return out;
}

TransitionGraph finalize_graph(const TransitionCounts& counts, Anchor anchor) {
  TransitionGraph graph;
  graph.anchor = anchor;
  graph.anchor_count = counts.anchor_count;
  graph.attributed_count = counts.attributed_count;
  graph.first_counts = counts.first_counts;
  graph.second_counts = counts.second_counts;
  if (counts.attributed_count > 0) {
    for (const auto& [kind, n] : counts.first_counts) {
      graph.first_action[kind] =
          static_cast<double>(n) / static_cast<double>(counts.attributed_count);
    }
  }
  for (const auto& [edge, n] : counts.second_counts) {
    const auto first_it = counts.first_counts.find(edge.first);
    if (first_it == counts.first_counts.end() || first_it->second == 0) continue;
    graph.second_action[edge] = static_cast<double>(n) / static_cast<double>(first_it->second);
  }
  return graph;
}

TransitionGraph transition_graph(const std::vector<TelemetryEvent>& events,
                                 const std::vector<TransformInteraction>& interactions,
                                 Anchor anchor, std::int64_t window_s, int max_line_gap) {
  return finalize_graph(transition_counts(events, interactions, anchor, window_s, max_line_gap),
                        anchor);
}

TransitionGraph prune_graph(const TransitionGraph& graph, double first_min, double second_min) {
  TransitionGraph out = graph;
  for (auto it = out.first_action.begin(); it != out.first_action.end();) {
    if (it->second < first_min) {
      out.first_counts.erase(it->first);
      it = out.first_action.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = out.second_action.begin(); it != out.second_action.end();) {
    if (it->second < second_min) {
      out.second_counts.erase(it->first);
      it = out.second_action.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

std::string graph_to_dot(const TransitionGraph& graph) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "digraph " << anchor_str(graph.anchor) << " {\n";
  out << "  rankdir=LR;\n  node [shape=box];\n";
  out << "  anchor [label=\"" << anchor_str(graph.anchor) << "\\nanchors="
      << graph.anchor_count << "\"];\n";
  for (const auto& [kind, p] : graph.first_action) {
    out << "  first_" << event_kind_str(kind) << " [label=\"" << event_kind_str(kind)
        << "\"];\n";
    out << "  anchor -> first_" << event_kind_str(kind) << " [label=\"" << fmt(p) << "\"];\n";
  }
  for (const auto& [edge, p] : graph.second_action) {
    out << "  second_" << event_kind_str(edge.second) << " [label=\""
        << event_kind_str(edge.second) << "\"];\n";
    out << "  first_" << event_kind_str(edge.first) << " -> second_"
        << event_kind_str(edge.second) << " [label=\"" << fmt(p) << "\", color=gray];\n";
  }
  out << "}\n";
  return out.str();
}

// ---- synthetic log generation ------------------------------------------------------

namespace {

enum class PairKind { Identical, Tweaked, Ungated };

// Largest-remainder allocation of n slots across probs; deterministic,
// ties to the lower index.
std::vector<std::size_t> allocate_counts(const std::vector<double>& probs, std::size_t n) {
  double sum = 0.0;
  for (double p : probs) sum += p;
  const auto target = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(sum * static_cast<double>(n))));
  std::vector<std::size_t> counts(probs.size(), 0);
  std::vector<std::pair<double, std::size_t>> fracs;
  std::size_t base = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double exact = probs[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(exact);
    base += counts[i];
    fracs.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; base < target && i < fracs.size(); ++i) {
    ++counts[fracs[i].second];
    ++base;
  }
  return counts;
}

void validate_mix(const std::map<EventKind, double>& mix, const char* label) {
  double sum = 0.0;
  for (const auto& [kind, p] : mix) {
    if (kind == EventKind::Accept || kind == EventKind::Reject) {
      throw ValidationError(std::string(label) + " mix cannot plant verdict events");
    }
    if (p < 0.0) throw ValidationError(std::string(label) + " mix has a negative proportion");
    sum += p;
  }
  if (sum > 1.0 + 1e-9) {
    throw ValidationError(std::string(label) + " mix proportions sum to more than 1");
  }
}

const EditDiff& canned_diff() {
  static const EditDiff diff = parse_unified_diff("@@ -2,1 +2,1 @@\n-    return 1\n+    return 2\n");
  return diff;
}

}  // namespace

SynthResult synthesize_logs(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.identical_rate < 0.0 || spec.identical_rate > 1.0 || spec.tweak_rate < 0.0 ||
      spec.tweak_rate > 1.0) {
    throw ValidationError("identical_rate and tweak_rate must be within [0, 1]");
  }
  if (spec.identical_rate + spec.tweak_rate > 1.0 + 1e-9) {
    throw ValidationError("identical_rate + tweak_rate exceeds 1");
  }
  if (spec.accept_rate < 0.0 || spec.accept_rate > 1.0) {
    throw ValidationError("accept_rate must be within [0, 1]");
  }
  validate_mix(spec.accept_mix, "accept");
  validate_mix(spec.reject_mix, "reject");

  SynthResult result;
  const std::size_t users = spec.users;
  const std::size_t ipu = spec.interactions_per_user;
  const std::size_t total = users * ipu;
  if (total == 0) return result;

  Rng rng(seed);
  constexpr std::int64_t kWindow = 600;  // generator keeps planted pairs inside defaults

  // 1. Pair plans: one per consecutive same-user pair.
  const std::size_t pairs_per_user = ipu > 0 ? ipu - 1 : 0;
  const std::size_t total_pairs = users * pairs_per_user;
  std::vector<PairKind> pair_plan(total_pairs, PairKind::Ungated);
  {
    auto k = static_cast<std::size_t>(
        std::llround(spec.identical_rate * static_cast<double>(total_pairs)));
    auto m = static_cast<std::size_t>(
        std::llround(spec.tweak_rate * static_cast<double>(total_pairs)));
    k = std::min(k, total_pairs);
    m = std::min(m, total_pairs - k);
    for (std::size_t i = 0; i < k; ++i) pair_plan[i] = PairKind::Identical;
    for (std::size_t i = 0; i < m; ++i) pair_plan[k + i] = PairKind::Tweaked;
    rng.shuffle(pair_plan);
  }
  auto pair_at = [&](std::size_t user, std::size_t slot) {
    return pair_plan[user * pairs_per_user + slot];
  };

  // 2. Verdict plans.
  std::vector<Verdict> verdict_plan(total, Verdict::Rejected);
  {
    const auto accepted = static_cast<std::size_t>(
        std::llround(spec.accept_rate * static_cast<double>(total)));
    for (std::size_t i = 0; i < accepted && i < total; ++i) verdict_plan[i] = Verdict::Accepted;
    rng.shuffle(verdict_plan);
  }

  // 3. First-action plans, per verdict class, honoring the structural
  //    constraints: a TransformRequest first action needs the following pair
  //    gated; an unplanted anchor must not be followed by a gated request.
  std::vector<std::optional<EventKind>> action_plan(total);
  for (const Verdict verdict : {Verdict::Accepted, Verdict::Rejected}) {
    const auto& mix = verdict == Verdict::Accepted ? spec.accept_mix : spec.reject_mix;
    std::vector<std::size_t> gated_slots;    // anchors whose following pair is gated
    std::vector<std::size_t> loose_slots;    // ungated follow-up or last-in-user
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (verdict_plan[idx] != verdict) continue;
      const std::size_t slot = idx % ipu;
      const bool has_pair = slot + 1 < ipu;
      const bool gated = has_pair && pair_at(idx / ipu, slot) != PairKind::Ungated;
      (gated ? gated_slots : loose_slots).push_back(idx);
    }
    rng.shuffle(gated_slots);
    rng.shuffle(loose_slots);

    const std::size_t n_class = gated_slots.size() + loose_slots.size();
    std::vector<EventKind> kinds;
    std::vector<double> probs;
    for (const auto& [kind, p] : mix) {
      kinds.push_back(kind);
      probs.push_back(p);
    }
    const std::vector<std::size_t> counts = allocate_counts(probs, n_class);
    std::size_t planted = 0;
    for (std::size_t c : counts) planted += c;
    const std::size_t unplanted = n_class - planted;

    // TransformRequest plans consume gated slots.
    std::size_t tr_need = 0;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (kinds[i] == EventKind::TransformRequest) tr_need = counts[i];
    }
    if (tr_need > gated_slots.size()) {
      throw ValidationError(
          "transition mix plants more TransformRequest follow-ups than gated pairs exist; "
          "raise identical_rate/tweak_rate or lower the TransformRequest share");
    }
    if (unplanted > loose_slots.size()) {
      throw ValidationError(
          "transition mix leaves anchors unplanted but every anchor is followed by a gated "
          "request; make the mix sum to 1 or lower identical_rate/tweak_rate");
    }

    std::size_t gated_cursor = 0;
    std::size_t loose_cursor = 0;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (kinds[i] != EventKind::TransformRequest) continue;
      for (std::size_t c = 0; c < counts[i]; ++c) {
        action_plan[gated_slots[gated_cursor++]] = EventKind::TransformRequest;
      }
    }
    for (std::size_t c = 0; c < unplanted; ++c) {
      action_plan[loose_slots[loose_cursor++]] = std::nullopt;
    }
    // Remaining kinds spread over whatever slots are left.
    std::vector<std::size_t> rest(gated_slots.begin() + static_cast<long>(gated_cursor),
                                  gated_slots.end());
    rest.insert(rest.end(), loose_slots.begin() + static_cast<long>(loose_cursor),
                loose_slots.end());
    rng.shuffle(rest);
    std::size_t rest_cursor = 0;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (kinds[i] == EventKind::TransformRequest) continue;
      for (std::size_t c = 0; c < counts[i]; ++c) {
        action_plan[rest[rest_cursor++]] = kinds[i];
      }
    }
  }

  // 4. Timeline.
  static const char* kPhrases[] = {"rename the helper",      "add null checks",
                                   "convert to a list comp", "extract a function",
                                   "simplify the branch",    "inline the constant"};
  for (std::size_t u = 0; u < users; ++u) {
    const std::string user = "u" + std::to_string(u);
    std::int64_t t = 1'700'000'000 + static_cast<std::int64_t>(u) * 10'000'000;
    std::size_t segment = 0;
    std::string prompt_text;
    CodeRegion region;

    for (std::size_t k = 0; k < ipu; ++k) {
      const std::size_t idx = u * ipu + k;
      const bool fresh_task =
          k == 0 || pair_at(u, k - 1) == PairKind::Ungated;
      if (fresh_task) {
        ++segment;
        const int start = 10 + static_cast<int>(rng.below(200));
        region = make_region(user + "/f" + std::to_string(segment) + ".py", start,
                             start + static_cast<int>(rng.below(6)));
        prompt_text = "task " + std::to_string(segment) + " for " + user + ": " +
                      kPhrases[rng.below(std::size(kPhrases))];
      } else if (pair_at(u, k - 1) == PairKind::Tweaked) {
        prompt_text += " " + std::string(1 + rng.below(4), 'x');
        const int shift = static_cast<int>(rng.below(4));
        region.start_line += shift;
        region.end_line += shift;
      } else {
        // identical re-prompt: text unchanged, region may drift within gate
        const int shift = static_cast<int>(rng.below(4));
        region.start_line += shift;
        region.end_line += shift;
      }

      const std::string iid = user + "-i" + std::to_string(k);
      TransformInteraction interaction;
      interaction.interaction_id = iid;
      interaction.prompt = {prompt_text, user, t};
      interaction.region = region;
      interaction.context = "def f():\n    return 1\n";
      interaction.generated_diff = canned_diff();
      interaction.verdict = verdict_plan[idx];
      interaction.request_ts = t;
      interaction.verdict_ts = t + 2;
      result.interactions.push_back(interaction);

      result.events.push_back({t, user, EventKind::TransformRequest, region, iid});
      result.events.push_back({t + 2, user,
                               verdict_plan[idx] == Verdict::Accepted ? EventKind::Accept
                                                                      : EventKind::Reject,
                               region, iid});

      const std::optional<EventKind> action = action_plan[idx];
      if (action) {
        auto& planted = verdict_plan[idx] == Verdict::Accepted ? result.planted_accept_first
                                                               : result.planted_reject_first;
        ++planted[*action];
        if (*action != EventKind::TransformRequest) {
          TelemetryEvent ev;
          ev.ts = t + 5;
          ev.user_id = user;
          ev.kind = *action;
          if (*action != EventKind::Other) ev.region = region;  // unsourced edits stay regionless
          result.events.push_back(ev);
        }
      }

      // Position the next request.
      if (k + 1 < ipu) {
        const PairKind pk = pair_at(u, k);
        if (pk == PairKind::Ungated) {
          t = t + 2 + 2 * kWindow + 50;
        } else {
          result.planted_pairs.push_back(
              {iid, user + "-i" + std::to_string(k + 1),
               pk == PairKind::Identical ? RepromptClass::Identical : RepromptClass::Tweaked});
          t = action == EventKind::TransformRequest ? t + 5 : t + 8;
        }
      }
    }
  }

  std::sort(result.interactions.begin(), result.interactions.end(),
            [](const TransformInteraction& a, const TransformInteraction& b) {
              if (a.request_ts != b.request_ts) return a.request_ts < b.request_ts;
              return a.interaction_id < b.interaction_id;
            });
  std::stable_sort(result.events.begin(), result.events.end(),
                   [](const TelemetryEvent& a, const TelemetryEvent& b) {
                     if (a.ts != b.ts) return a.ts < b.ts;
                     return a.user_id < b.user_id;
                   });
  return result;
}

// ---- JSONL I/O -----------------------------------------------------------------------

namespace {

CodeRegion region_from_json(const json& j) {
  return make_region(j.at("file").get<std::string>(), j.at("start_line").get<int>(),
                     j.at("end_line").get<int>());
}

template <typename Fn>
void for_each_jsonl_line(const std::filesystem::path& path, Fn&& fn) {
  const std::string content = read_file(path);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    ++line_no;
    std::string_view line(content.data() + start, end - start);
    if (!trim(line).empty()) {
      json parsed;
      try {
        parsed = json::parse(line);
      } catch (const json::exception& e) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": invalid JSON: " + e.what());
      }
      // artifact files may open with a provenance header line
      if (parsed.is_object() && parsed.contains("_meta")) {
        if (end == content.size()) break;
        start = end + 1;
        continue;
      }
      try {
        fn(parsed);
      } catch (const json::exception& e) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": bad record: " + e.what());
      } catch (const Error& e) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (end == content.size()) break;
    start = end + 1;
  }
}

}  // namespace

std::vector<TelemetryEvent> load_events(const std::filesystem::path& path) {
  std::vector<TelemetryEvent> events;
  for_each_jsonl_line(path, [&](const json& j) {
    TelemetryEvent event;
    event.ts = j.at("ts").get<std::int64_t>();
    event.user_id = j.at("user").get<std::string>();
    event.kind = event_kind_from_str(j.at("kind").get<std::string>());
    if (j.contains("file")) {
      event.region = make_region(j.at("file").get<std::string>(), j.at("start_line").get<int>(),
                                 j.at("end_line").get<int>());
    }
    if (j.contains("interaction_id")) {
      event.interaction_id = j.at("interaction_id").get<std::string>();
    }
    events.push_back(std::move(event));
  });
  return events;
}

void save_events(const std::filesystem::path& path, const std::vector<TelemetryEvent>& events) {
  std::string out;
  for (const TelemetryEvent& event : events) {
    json j{{"ts", event.ts}, {"user", event.user_id}, {"kind", event_kind_str(event.kind)}};
    if (event.region) {
      j["file"] = event.region->file_id;
      j["start_line"] = event.region->start_line;
      j["end_line"] = event.region->end_line;
    }
    if (event.interaction_id) j["interaction_id"] = *event.interaction_id;
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<TransformInteraction> load_interactions(const std::filesystem::path& path) {
  std::vector<TransformInteraction> interactions;
  for_each_jsonl_line(path, [&](const json& j) {
    TransformInteraction it;
    it.interaction_id = j.at("interaction_id").get<std::string>();
    const json& p = j.at("prompt");
    it.prompt.text = normalize_newlines(p.at("text").get<std::string>());
    it.prompt.author_id = p.at("author").get<std::string>();
    it.prompt.ts = p.value("ts", std::int64_t{0});
    validate_prompt(it.prompt);
    it.region = region_from_json(j);
    it.context = normalize_newlines(j.value("context", ""));
    it.generated_diff = parse_unified_diff(normalize_newlines(j.value("generated_diff", "")));
    it.verdict = verdict_from_str(j.value("verdict", "none"));
    it.request_ts = j.at("request_ts").get<std::int64_t>();
    it.verdict_ts = j.value("verdict_ts", it.request_ts);
    interactions.push_back(std::move(it));
  });
  return interactions;
}

void save_interactions(const std::filesystem::path& path,
                       const std::vector<TransformInteraction>& interactions) {
  std::string out;
  for (const TransformInteraction& it : interactions) {
    json j{{"interaction_id", it.interaction_id},
           {"prompt", json{{"text", it.prompt.text}, {"author", it.prompt.author_id},
                           {"ts", it.prompt.ts}}},
           {"file", it.region.file_id},
           {"start_line", it.region.start_line},
           {"end_line", it.region.end_line},
           {"context", it.context},
           {"generated_diff", it.generated_diff.raw_text},
           {"verdict", verdict_str(it.verdict)},
           {"request_ts", it.request_ts},
           {"verdict_ts", it.verdict_ts}};
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

}  // namespace reprompt
