#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "condense/corpus.hpp"

namespace condense {

/// Recall, precision and F1 as fractions in [0, 1].
struct RougeScore {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

using TokenSpan = std::span<const std::string>;

/// Concatenates sentences in order; multi-sentence inputs to the metrics
/// below are scored over this concatenation.
Sentence flatten(const std::vector<Sentence>& sentences);

/// Builds a score from an overlap count and the two totals. Any zero total
/// yields an all-zero score.
RougeScore make_score(std::size_t overlap, std::size_t candidate_total,
                      std::size_t reference_total);

/// ROUGE-N with clipped multiset n-gram counts, n in {1, 2}. No stemming.
RougeScore rouge_n(TokenSpan candidate, TokenSpan reference, int n);
RougeScore rouge_n(const std::vector<Sentence>& candidate,
                   const std::vector<Sentence>& reference, int n);

std::size_t lcs_length(TokenSpan a, TokenSpan b);

/// ROUGE-L from the longest common subsequence.
RougeScore rouge_l(TokenSpan candidate, TokenSpan reference);
RougeScore rouge_l(const std::vector<Sentence>& candidate,
                   const std::vector<Sentence>& reference);

}  // namespace condense
