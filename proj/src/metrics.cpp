#include "reprompt/metrics.hpp"

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "reprompt/util.hpp"

namespace reprompt {

std::string metric_name_str(MetricName metric) {
  switch (metric) {
    case MetricName::Chrf: return "chrf";
    case MetricName::Gestalt: return "gestalt";
    case MetricName::NormalizedLevenshteinSimilarity: return "normalized_levenshtein_similarity";
    case MetricName::Autorater: return "autorater";
  }
  return "unknown";
}

MetricName metric_name_from_str(const std::string& name) {
  if (name == "chrf") return MetricName::Chrf;
  if (name == "gestalt") return MetricName::Gestalt;
  if (name == "normalized_levenshtein_similarity") {
    return MetricName::NormalizedLevenshteinSimilarity;
  }
  if (name == "autorater") return MetricName::Autorater;
  throw ValidationError("unknown metric name: " + name);
}

// ---- levenshtein ----------------------------------------------------------------

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);  // keep the row small
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (m == 0) return n;

  std::vector<std::size_t> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[m];
}

double normalized_levenshtein(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

// ---- chrf ------------------------------------------------------------------------

SimilarityScore chrf(std::string_view hypothesis, std::string_view reference,
                     const ChrfConfig& config) {
  if (config.max_ngram < 1) throw ValidationError("chrf max_ngram must be >= 1");
  if (config.beta <= 0.0) throw ValidationError("chrf beta must be > 0");

  const std::string hyp = collapse_ws(hypothesis);
  const std::string ref = collapse_ws(reference);
  if (hyp.empty() && ref.empty()) return {1.0, MetricName::Chrf};
  if (hyp.empty() || ref.empty()) return {0.0, MetricName::Chrf};

  const double beta_sq = config.beta * config.beta;
  double f_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= config.max_ngram; ++n) {
    const std::size_t len = static_cast<std::size_t>(n);
    if (hyp.size() < len || ref.size() < len) continue;  // a side has no n-grams

    std::unordered_map<std::string_view, std::size_t> ref_counts;
    ref_counts.reserve(ref.size());
    for (std::size_t i = 0; i + len <= ref.size(); ++i) {
      ++ref_counts[std::string_view(ref).substr(i, len)];
    }
    std::unordered_map<std::string_view, std::size_t> hyp_counts;
    hyp_counts.reserve(hyp.size());
    for (std::size_t i = 0; i + len <= hyp.size(); ++i) {
      ++hyp_counts[std::string_view(hyp).substr(i, len)];
    }

    std::size_t matches = 0;
    for (const auto& [gram, count] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matches += std::min(count, it->second);
    }
    const double hyp_total = static_cast<double>(hyp.size() - len + 1);
    const double ref_total = static_cast<double>(ref.size() - len + 1);
    const double precision = static_cast<double>(matches) / hyp_total;
    const double recall = static_cast<double>(matches) / ref_total;
    const double denom = beta_sq * precision + recall;
    f_sum += denom > 0.0 ? (1.0 + beta_sq) * precision * recall / denom : 0.0;
    ++orders;
  }
  return {orders > 0 ? f_sum / orders : 0.0, MetricName::Chrf};
}

// ---- gestalt ------------------------------------------------------------------------

namespace {

struct Block {
  std::size_t a_start = 0;
  std::size_t b_start = 0;
  std::size_t len = 0;
};

// Longest common substring of a[a_lo..a_hi) and b[b_lo..b_hi), ties broken
// by the smallest start in a, then the smallest start in b. Scanning starts
// in ascending order and only accepting strictly longer matches implements
// that tie-break directly.
Block longest_block(std::string_view a, std::size_t a_lo, std::size_t a_hi,
                    std::string_view b, std::size_t b_lo, std::size_t b_hi) {
  Block best;
  for (std::size_t i = a_lo; i < a_hi; ++i) {
    if (a_hi - i <= best.len) break;
    for (std::size_t j = b_lo; j < b_hi; ++j) {
      if (b_hi - j <= best.len) break;
      if (a[i] != b[j]) continue;
      std::size_t k = 1;
      while (i + k < a_hi && j + k < b_hi && a[i + k] == b[j + k]) ++k;
      if (k > best.len) best = {i, j, k};
    }
  }
  return best;
}

std::size_t matched_total(std::string_view a, std::size_t a_lo, std::size_t a_hi,
                          std::string_view b, std::size_t b_lo, std::size_t b_hi) {
  if (a_lo >= a_hi || b_lo >= b_hi) return 0;
  const Block block = longest_block(a, a_lo, a_hi, b, b_lo, b_hi);
  if (block.len == 0) return 0;
  return block.len + matched_total(a, a_lo, block.a_start, b, b_lo, block.b_start) +
         matched_total(a, block.a_start + block.len, a_hi, b, block.b_start + block.len, b_hi);
}

}  // namespace

SimilarityScore gestalt(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return {1.0, MetricName::Gestalt};
  if (a.empty() || b.empty()) return {0.0, MetricName::Gestalt};
  const std::size_t matched = matched_total(a, 0, a.size(), b, 0, b.size());
  return {2.0 * static_cast<double>(matched) / static_cast<double>(a.size() + b.size()),
          MetricName::Gestalt};
}

double similarity_by_metric(MetricName metric, std::string_view a, std::string_view b,
                            const ChrfConfig& config) {
  switch (metric) {
    case MetricName::Chrf: return chrf(a, b, config).value;
    case MetricName::Gestalt: return gestalt(a, b).value;
    case MetricName::NormalizedLevenshteinSimilarity: return 1.0 - normalized_levenshtein(a, b);
    case MetricName::Autorater: break;
  }
  throw ValidationError("autorater similarity requires a model judge");
}

}  // namespace reprompt
