#include "condense/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "condense/error.hpp"
#include "json.hpp"

namespace condense {

namespace {

const std::vector<std::string> kReservedTokens = {"<pad>", "<unk>", "<s>",
                                                  "</s>"};

std::vector<Sentence> parse_sentences(const nlohmann::json& array,
                                      const char* field, std::size_t line) {
  if (!array.is_array()) {
    throw DataError("line " + std::to_string(line) + ": field '" + field +
                    "' is not an array");
  }
  std::vector<Sentence> sentences;
  for (const auto& item : array) {
    if (!item.is_string()) {
      throw DataError("line " + std::to_string(line) + ": field '" + field +
                      "' holds a non-string sentence");
    }
    Sentence tokens = tokenize(item.get<std::string>());
    if (!tokens.empty()) sentences.push_back(std::move(tokens));
  }
  return sentences;
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(name) + "'");
}

Sentence tokenize(std::string_view text) {
  Sentence tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
    std::size_t end = pos;
    while (end < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[end]))) {
      ++end;
    }
    if (end > pos) {
      std::string token(text.substr(pos, end - pos));
      for (auto& ch : token) {
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      }
      tokens.push_back(std::move(token));
    }
    pos = end;
  }
  return tokens;
}

std::vector<CorpusRecord> parse_corpus(std::string_view text,
                                       const WarningSink& warn) {
  std::vector<CorpusRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) +
                      ": malformed JSON: " + e.what());
    }
    if (!record.is_object() || !record.contains("id") ||
        !record.contains("article") || !record.contains("abstract")) {
      throw DataError("line " + std::to_string(line_no) +
                      ": record needs 'id', 'article' and 'abstract'");
    }
    const auto& id = record["id"];
    if (!id.is_string() && !id.is_number()) {
      throw DataError("line " + std::to_string(line_no) + ": bad 'id'");
    }

    CorpusRecord out;
    out.document.id = id.is_string() ? id.get<std::string>() : id.dump();
    out.document.sentences =
        parse_sentences(record["article"], "article", line_no);
    out.summary.sentences =
        parse_sentences(record["abstract"], "abstract", line_no);
    if (out.document.sentences.empty() || out.summary.sentences.empty()) {
      if (warn) {
        warn("line " + std::to_string(line_no) + ": record '" +
             out.document.id + "' skipped (empty article or abstract)");
      }
      if (end == text.size()) break;
      continue;
    }
    records.push_back(std::move(out));
    if (end == text.size()) break;
  }
  return records;
}

std::vector<CorpusRecord> ingest_corpus(const std::string& path,
                                        const WarningSink& warn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), warn);
}

Sentence truncate(const Sentence& sentence, std::size_t limit) {
  if (limit < 1) throw ConfigError("truncation limit must be >= 1");
  if (sentence.size() <= limit) return sentence;
  return Sentence(sentence.begin(),
                  sentence.begin() + static_cast<std::ptrdiff_t>(limit));
}

void truncate_corpus(std::vector<CorpusRecord>& records,
                     const TruncationLimits& limits) {
  for (auto& record : records) {
    for (auto& s : record.document.sentences) s = truncate(s, limits.article);
    for (auto& s : record.summary.sentences) s = truncate(s, limits.summary);
  }
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& regular_tokens) {
  tokens_ = kReservedTokens;
  tokens_.insert(tokens_.end(), regular_tokens.begin(), regular_tokens.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] =
        index_.emplace(tokens_[i], static_cast<std::int32_t>(i));
    if (!inserted) {
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

std::int32_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) != 0;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary '" + path + "'");
  for (const auto& token : tokens_) out << token << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary '" + path + "'");
  std::vector<std::string> all;
  std::string line;
  while (std::getline(in, line)) all.push_back(line);
  if (all.size() < kReservedTokens.size() ||
      !std::equal(kReservedTokens.begin(), kReservedTokens.end(),
                  all.begin())) {
    throw DataError("vocabulary '" + path + "' lacks the reserved header");
  }
  return Vocabulary(std::vector<std::string>(
      all.begin() + static_cast<std::ptrdiff_t>(kReservedTokens.size()),
      all.end()));
}

Vocabulary build_vocab(const std::vector<CorpusRecord>& records,
                       std::size_t cap) {
  if (cap < 1) throw ConfigError("vocabulary cap must be >= 1");
  if (records.empty()) throw ConfigError("cannot build vocabulary from no data");
  std::map<std::string, std::size_t> counts;
  auto count = [&](const std::vector<Sentence>& sentences) {
    for (const auto& s : sentences) {
      for (const auto& t : s) ++counts[t];
    }
  };
  for (const auto& r : records) {
    count(r.document.sentences);
    count(r.summary.sentences);
  }
  for (const auto& reserved : kReservedTokens) counts.erase(reserved);

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  // map iteration is already lexicographic, so a stable sort keeps ties ordered
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > cap) ranked.resize(cap);

  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [token, n] : ranked) tokens.push_back(token);
  return Vocabulary(tokens);
}

EncodedSequence encode(const Sentence& sentence, const Vocabulary& vocab) {
  EncodedSequence out;
  out.fixed_ids.reserve(sentence.size());
  out.extended_ids.reserve(sentence.size());
  for (const auto& token : sentence) {
    const std::int32_t id = vocab.id(token);
    out.fixed_ids.push_back(id);
    if (id != Vocabulary::kUnk || token == "<unk>") {
      out.extended_ids.push_back(id);
      continue;
    }
    auto it = std::find(out.oov_tokens.begin(), out.oov_tokens.end(), token);
    std::size_t slot = static_cast<std::size_t>(it - out.oov_tokens.begin());
    if (it == out.oov_tokens.end()) out.oov_tokens.push_back(token);
    out.extended_ids.push_back(static_cast<std::int32_t>(vocab.size() + slot));
  }
  return out;
}

std::vector<std::int32_t> encode_target(const Sentence& target,
                                        const Vocabulary& vocab,
                                        const EncodedSequence& source) {
  std::vector<std::int32_t> ids;
  ids.reserve(target.size());
  for (const auto& token : target) {
    std::int32_t id = vocab.id(token);
    if (id == Vocabulary::kUnk && token != "<unk>") {
      auto it = std::find(source.oov_tokens.begin(), source.oov_tokens.end(),
                          token);
      if (it != source.oov_tokens.end()) {
        id = static_cast<std::int32_t>(vocab.size() +
                                       (it - source.oov_tokens.begin()));
      }
    }
    ids.push_back(id);
  }
  return ids;
}

Sentence decode(const std::vector<std::int32_t>& ids, const Vocabulary& vocab,
                const std::vector<std::string>& oov_tokens) {
  Sentence out;
  out.reserve(ids.size());
  for (auto id : ids) {
    if (id >= 0 && static_cast<std::size_t>(id) >= vocab.size()) {
      const std::size_t slot = static_cast<std::size_t>(id) - vocab.size();
      if (slot >= oov_tokens.size()) {
        throw DataError("extended id " + std::to_string(id) +
                        " has no OOV token");
      }
      out.push_back(oov_tokens[slot]);
    } else {
      out.push_back(vocab.token(id));
    }
  }
  return out;
}

std::string join_tokens(const Sentence& sentence) {
  std::string out;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (i) out += ' ';
    out += sentence[i];
  }
  return out;
}

}  // namespace condense
