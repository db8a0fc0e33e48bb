#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "condense/corpus.hpp"
#include "condense/error.hpp"

namespace condense {

enum class CompressionLevel { kLow = 0, kHigh = 1 };

std::string_view level_name(CompressionLevel level);
CompressionLevel parse_level(std::string_view name);

/// Raised by `secondary_source` on a one-sentence document.
class NoSecondaryError : public DataError {
 public:
  using DataError::DataError;
};

/// Document sentence with the highest ROUGE-L recall against
/// `summary_sentence`; ties go to the lowest index.
std::size_t source_sentence(const Document& doc, const Sentence& summary_sentence);

/// Best partner for `primary`: argmax over i != primary of ROUGE-L recall of
/// the concatenation [x_primary ; x_i] against the summary sentence.
std::size_t secondary_source(const Document& doc, const Sentence& summary_sentence,
                             std::size_t primary);

/// High iff (|source| - |target|) / |source| > 0.5.
CompressionLevel compression_level(const Sentence& source, const Sentence& target);

/// x_i^0 (the original sentence) followed by its condensed versions.
using CandidateSet = std::vector<Sentence>;

/// Flattened, interleaved candidates: slot l = i * versions + j.
struct ProxyDocument {
  std::vector<Sentence> candidates;
  std::vector<std::pair<std::size_t, std::size_t>> slots;  // (sentence, version)
  std::size_t versions = 0;                                // k + 1

  std::size_t size() const { return candidates.size(); }
  std::size_t num_sets() const { return versions == 0 ? 0 : size() / versions; }
};

/// All sets must share one size (k + 1 >= 1).
ProxyDocument make_proxy(const std::vector<CandidateSet>& sets);

struct ExtractionLabelSet {
  std::vector<std::size_t> labels;
};

/// Per summary sentence, the proxy slot with the highest ROUGE-L F1
/// (ties to the lowest slot). Repeats across summary sentences are allowed.
ExtractionLabelSet extraction_labels(const ProxyDocument& proxy,
                                     const ReferenceSummary& summary);

enum class PairMode { kOneToOne, kTwoToOne };

struct PairIndex {
  std::size_t source = 0;
  std::optional<std::size_t> secondary;
  CompressionLevel level = CompressionLevel::kLow;
  std::size_t target = 0;
};

struct DocumentAlignment {
  std::string id;
  std::vector<PairIndex> pairs;
};

struct AbstractorPair {
  Sentence source;
  std::optional<Sentence> secondary;
  Sentence target;
  CompressionLevel level = CompressionLevel::kLow;

  /// Encoder input: the source, followed by the secondary sentence if any.
  Sentence input() const;
};

DocumentAlignment align_document(const CorpusRecord& record, PairMode mode,
                                 const WarningSink& warn = {});

AbstractorPair materialize(const CorpusRecord& record, const PairIndex& index);

std::vector<AbstractorPair> build_pairs(const std::vector<CorpusRecord>& records,
                                        PairMode mode,
                                        const WarningSink& warn = {});

}  // namespace condense
