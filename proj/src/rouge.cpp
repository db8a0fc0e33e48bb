#include "condense/rouge.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "condense/error.hpp"

namespace condense {

namespace {

using NGram = std::vector<std::string>;

std::map<NGram, std::size_t> count_ngrams(TokenSpan tokens, int n) {
  std::map<NGram, std::size_t> counts;
  const auto width = static_cast<std::size_t>(n);
  if (tokens.size() < width) return counts;
  for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
    ++counts[NGram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + width))];
  }
  return counts;
}

}  // namespace

Sentence flatten(const std::vector<Sentence>& sentences) {
  Sentence out;
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

RougeScore make_score(std::size_t overlap, std::size_t candidate_total,
                      std::size_t reference_total) {
  RougeScore score;
  if (candidate_total == 0 || reference_total == 0) return score;
  score.recall = static_cast<double>(overlap) / static_cast<double>(reference_total);
  score.precision =
      static_cast<double>(overlap) / static_cast<double>(candidate_total);
  if (score.recall + score.precision > 0.0) {
    score.f1 = 2.0 * score.precision * score.recall /
               (score.precision + score.recall);
  }
  return score;
}

RougeScore rouge_n(TokenSpan candidate, TokenSpan reference, int n) {
  if (n != 1 && n != 2) throw ConfigError("rouge_n supports n = 1 or 2");
  const auto cand = count_ngrams(candidate, n);
  const auto ref = count_ngrams(reference, n);
  std::size_t cand_total = 0;
  std::size_t ref_total = 0;
  std::size_t overlap = 0;
  for (const auto& [gram, c] : cand) cand_total += c;
  for (const auto& [gram, c] : ref) {
    ref_total += c;
    auto it = cand.find(gram);
    if (it != cand.end()) overlap += std::min(c, it->second);
  }
  return make_score(overlap, cand_total, ref_total);
}

RougeScore rouge_n(const std::vector<Sentence>& candidate,
                   const std::vector<Sentence>& reference, int n) {
  const Sentence c = flatten(candidate);
  const Sentence r = flatten(reference);
  return rouge_n(TokenSpan(c), TokenSpan(r), n);
}

std::size_t lcs_length(TokenSpan a, TokenSpan b) {
  if (a.empty() || b.empty()) return 0;
  // two rolling rows over b
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                     : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

RougeScore rouge_l(TokenSpan candidate, TokenSpan reference) {
  return make_score(lcs_length(candidate, reference), candidate.size(),
                    reference.size());
}

RougeScore rouge_l(const std::vector<Sentence>& candidate,
                   const std::vector<Sentence>& reference) {
  const Sentence c = flatten(candidate);
  const Sentence r = flatten(reference);
  return rouge_l(TokenSpan(c), TokenSpan(r));
}

}  // namespace condense
