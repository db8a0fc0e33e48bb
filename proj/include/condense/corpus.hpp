#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace condense {

/// One tokenized sentence. Tokens are lowercase.
using Sentence = std::vector<std::string>;

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
};

struct ReferenceSummary {
  std::vector<Sentence> sentences;
};

struct CorpusRecord {
  Document document;
  ReferenceSummary summary;
};

enum class Split { kTrain, kValid, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

/// Receives non-fatal ingestion diagnostics (skipped records and similar).
using WarningSink = std::function<void(const std::string&)>;

/// Whitespace tokenization of pre-tokenized text, lowercased.
Sentence tokenize(std::string_view text);

/// Parses a JSON-lines corpus. Each line is
/// {"id": str, "article": [str...], "abstract": [str...]}.
/// Empty sentences are dropped; records with an empty article or abstract
/// are skipped with a warning. A malformed line raises DataError naming
/// the 1-based line number.
std::vector<CorpusRecord> ingest_corpus(const std::string& path,
                                        const WarningSink& warn = {});
std::vector<CorpusRecord> parse_corpus(std::string_view text,
                                       const WarningSink& warn = {});

Sentence truncate(const Sentence& sentence, std::size_t limit);

struct TruncationLimits {
  std::size_t article = 100;
  std::size_t summary = 30;
};

/// Applies `truncate` to every article and summary sentence in place.
void truncate_corpus(std::vector<CorpusRecord>& records,
                     const TruncationLimits& limits);

class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kBos = 2;
  static constexpr std::int32_t kEos = 3;
  static constexpr std::int32_t kNumReserved = 4;

  Vocabulary();
  /// Builds from an id-ordered token list that excludes the reserved tokens.
  explicit Vocabulary(const std::vector<std::string>& regular_tokens);

  std::int32_t id(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Keeps the `cap` most frequent tokens over articles and abstracts, ties
/// broken lexicographically. Reserved ids 0..3 precede them.
Vocabulary build_vocab(const std::vector<CorpusRecord>& records,
                       std::size_t cap);

/// Two views of a token sequence. `fixed_ids` maps OOV tokens to UNK;
/// `extended_ids` gives each distinct OOV token a temporary id
/// vocab.size() + k in first-occurrence order, recorded in `oov_tokens`.
struct EncodedSequence {
  std::vector<std::int32_t> fixed_ids;
  std::vector<std::int32_t> extended_ids;
  std::vector<std::string> oov_tokens;
};

EncodedSequence encode(const Sentence& sentence, const Vocabulary& vocab);

/// Maps target tokens into the extended id space of an encoded source.
/// OOV tokens that do not occur in the source map to UNK.
std::vector<std::int32_t> encode_target(const Sentence& target,
                                        const Vocabulary& vocab,
                                        const EncodedSequence& source);

/// Inverse of the extended view; ids past the vocabulary index `oov_tokens`.
Sentence decode(const std::vector<std::int32_t>& ids, const Vocabulary& vocab,
                const std::vector<std::string>& oov_tokens = {});

std::string join_tokens(const Sentence& sentence);

}  // namespace condense
