#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace reprompt {

enum class MetricName { Chrf, Gestalt, NormalizedLevenshteinSimilarity, Autorater };

std::string metric_name_str(MetricName metric);
MetricName metric_name_from_str(const std::string& name);  // throws ValidationError

// A similarity in [0, 1] tagged with the metric that produced it.
struct SimilarityScore {
  double value = 0.0;
  MetricName metric = MetricName::Chrf;
};

struct ChrfConfig {
  int max_ngram = 6;
  double beta = 1.0;
};

// Classic edit distance over bytes.
std::size_t levenshtein(std::string_view a, std::string_view b);

// levenshtein / max(|a|, |b|); 0 when both strings are empty.
double normalized_levenshtein(std::string_view a, std::string_view b);

// Character n-gram F-score, orders 1..max_ngram averaged. Whitespace runs
// collapse to a single space before extraction. Orders where either side has
// no n-grams are skipped, which keeps the score symmetric at beta == 1.
// Both-empty inputs score 1, exactly one empty scores 0.
SimilarityScore chrf(std::string_view hypothesis, std::string_view reference,
                     const ChrfConfig& config = {});

// Gestalt (Ratcliff/Obershelp): 2*M / (|a| + |b|) where M sums the lengths
// of recursively matched longest common substrings. Ties between equally
// long common substrings resolve to the smallest start in a, then in b.
// Both-empty inputs score 1.
SimilarityScore gestalt(std::string_view a, std::string_view b);

// Similarity under a locally computable metric (Autorater is rejected:
// it needs a model call).
double similarity_by_metric(MetricName metric, std::string_view a, std::string_view b,
                            const ChrfConfig& config = {});

}  // namespace reprompt
