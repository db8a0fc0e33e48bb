#include "condense/align.hpp"

#include "condense/rouge.hpp"

namespace condense {

std::string_view level_name(CompressionLevel level) {
  return level == CompressionLevel::kHigh ? "high" : "low";
}

CompressionLevel parse_level(std::string_view name) {
  if (name == "high") return CompressionLevel::kHigh;
  if (name == "low") return CompressionLevel::kLow;
  throw DataError("unknown compression level '" + std::string(name) + "'");
}

std::size_t source_sentence(const Document& doc, const Sentence& summary_sentence) {
  if (doc.sentences.empty()) throw DataError("source_sentence on empty document");
  std::size_t best = 0;
  double best_recall = -1.0;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    const double recall = rouge_l(TokenSpan(doc.sentences[i]),
                                  TokenSpan(summary_sentence)).recall;
    if (recall > best_recall) {
      best_recall = recall;
      best = i;
    }
  }
  return best;
}

std::size_t secondary_source(const Document& doc, const Sentence& summary_sentence,
                             std::size_t primary) {
  if (doc.sentences.size() < 2) {
    throw NoSecondaryError("document '" + doc.id +
                           "' has a single sentence; no secondary source");
  }
  if (primary >= doc.sentences.size()) {
    throw DataError("primary index out of range");
  }
  std::size_t best = 0;
  double best_recall = -1.0;
  Sentence joined;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    if (i == primary) continue;
    joined = doc.sentences[primary];
    joined.insert(joined.end(), doc.sentences[i].begin(), doc.sentences[i].end());
    const double recall =
        rouge_l(TokenSpan(joined), TokenSpan(summary_sentence)).recall;
    if (recall > best_recall) {
      best_recall = recall;
      best = i;
    }
  }
  return best;
}

CompressionLevel compression_level(const Sentence& source, const Sentence& target) {
  if (source.empty()) throw DataError("compression level of an empty source");
  const double src = static_cast<double>(source.size());
  const double ratio = (src - static_cast<double>(target.size())) / src;
  return ratio > 0.5 ? CompressionLevel::kHigh : CompressionLevel::kLow;
}

ProxyDocument make_proxy(const std::vector<CandidateSet>& sets) {
  ProxyDocument proxy;
  if (sets.empty()) return proxy;
  proxy.versions = sets.front().size();
  if (proxy.versions == 0) throw DataError("empty candidate set");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].size() != proxy.versions) {
      throw DataError("candidate sets differ in size (" +
                      std::to_string(sets[i].size()) + " vs " +
                      std::to_string(proxy.versions) + ")");
    }
    for (std::size_t j = 0; j < sets[i].size(); ++j) {
      proxy.candidates.push_back(sets[i][j]);
      proxy.slots.emplace_back(i, j);
    }
  }
  return proxy;
}

ExtractionLabelSet extraction_labels(const ProxyDocument& proxy,
                                     const ReferenceSummary& summary) {
  if (proxy.size() == 0) throw DataError("extraction labels over an empty proxy");
  ExtractionLabelSet out;
  out.labels.reserve(summary.sentences.size());
  for (const auto& y : summary.sentences) {
    std::size_t best = 0;
    double best_f1 = -1.0;
    for (std::size_t l = 0; l < proxy.size(); ++l) {
      const double f1 = rouge_l(TokenSpan(proxy.candidates[l]), TokenSpan(y)).f1;
      if (f1 > best_f1) {
        best_f1 = f1;
        best = l;
      }
    }
    out.labels.push_back(best);
  }
  return out;
}

Sentence AbstractorPair::input() const {
  Sentence out = source;
  if (secondary) out.insert(out.end(), secondary->begin(), secondary->end());
  return out;
}

DocumentAlignment align_document(const CorpusRecord& record, PairMode mode,
                                 const WarningSink& warn) {
  DocumentAlignment out;
  out.id = record.document.id;
  const auto& doc = record.document;
  if (mode == PairMode::kTwoToOne && doc.sentences.size() < 2) {
    if (warn) {
      warn("document '" + doc.id +
           "' has one sentence; excluded from two-to-one pairs");
    }
    return out;
  }
  for (std::size_t t = 0; t < record.summary.sentences.size(); ++t) {
    const auto& y = record.summary.sentences[t];
    PairIndex pair;
    pair.target = t;
    pair.source = source_sentence(doc, y);
    pair.level = compression_level(doc.sentences[pair.source], y);
    if (mode == PairMode::kTwoToOne) pair.secondary = secondary_source(doc, y, pair.source);
    out.pairs.push_back(pair);
  }
  return out;
}

AbstractorPair materialize(const CorpusRecord& record, const PairIndex& index) {
  const auto& sentences = record.document.sentences;
  if (index.source >= sentences.size() ||
      index.target >= record.summary.sentences.size() ||
      (index.secondary && *index.secondary >= sentences.size())) {
    throw DataError("pair index out of range for document '" +
                    record.document.id + "'");
  }
  AbstractorPair pair;
  pair.source = sentences[index.source];
  if (index.secondary) pair.secondary = sentences[*index.secondary];
  pair.target = record.summary.sentences[index.target];
  pair.level = index.level;
  return pair;
}

std::vector<AbstractorPair> build_pairs(const std::vector<CorpusRecord>& records,
                                        PairMode mode, const WarningSink& warn) {
  std::vector<AbstractorPair> pairs;
  for (const auto& record : records) {
    for (const auto& index : align_document(record, mode, warn).pairs) {
      pairs.push_back(materialize(record, index));
    }
  }
  return pairs;
}

}  // namespace condense
