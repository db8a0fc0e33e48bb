#include "condense/cache.hpp"

#include <fstream>

#include "condense/error.hpp"
#include "json.hpp"

namespace condense {

namespace {

using nlohmann::json;

json sentences_to_json(const std::vector<Sentence>& sentences) {
  json out = json::array();
  for (const auto& s : sentences) out.push_back(join_tokens(s));
  return out;
}

std::vector<Sentence> sentences_from_json(const json& array) {
  std::vector<Sentence> out;
  for (const auto& s : array) out.push_back(tokenize(s.get<std::string>()));
  return out;
}

json parse_line(const std::string& line, const char* what) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed ") + what + " record: " + e.what());
  }
}

template <class Record, class Parse>
std::vector<Record> read_jsonl(const std::string& path, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(line));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string to_json_line(const CandidateRecord& record) {
  json sets = json::array();
  for (const auto& set : record.sets) sets.push_back(sentences_to_json(set));
  json j;
  j["id"] = record.id;
  j["sets"] = std::move(sets);
  j["strategy"] = record.strategy;
  return j.dump();
}

std::string to_json_line(const SummaryRecord& record) {
  json j;
  j["id"] = record.id;
  j["summary"] = sentences_to_json(record.summary);
  j["slots"] = record.slots;
  return j.dump();
}

std::string to_json_line(const AlignmentRecord& record) {
  json pairs = json::array();
  for (const auto& p : record.alignment.pairs) {
    json entry;
    entry["src_idx"] = p.source;
    entry["sec_idx"] = p.secondary ? json(*p.secondary) : json(nullptr);
    entry["level"] = std::string(level_name(p.level));
    entry["target_idx"] = p.target;
    pairs.push_back(std::move(entry));
  }
  json j;
  j["id"] = record.alignment.id;
  j["pairs"] = std::move(pairs);
  j["ext_labels"] = record.ext_labels ? json(record.ext_labels->labels) : json(nullptr);
  return j.dump();
}

CandidateRecord parse_candidate_line(const std::string& line) {
  const json j = parse_line(line, "candidate");
  CandidateRecord r;
  r.id = j.at("id").get<std::string>();
  r.strategy = j.value("strategy", std::string());
  for (const auto& set : j.at("sets")) r.sets.push_back(sentences_from_json(set));
  return r;
}

SummaryRecord parse_summary_line(const std::string& line) {
  const json j = parse_line(line, "summary");
  SummaryRecord r;
  r.id = j.at("id").get<std::string>();
  r.summary = sentences_from_json(j.at("summary"));
  r.slots = j.at("slots").get<std::vector<std::size_t>>();
  return r;
}

AlignmentRecord parse_alignment_line(const std::string& line) {
  const json j = parse_line(line, "alignment");
  AlignmentRecord r;
  r.alignment.id = j.at("id").get<std::string>();
  for (const auto& entry : j.at("pairs")) {
    PairIndex p;
    p.source = entry.at("src_idx").get<std::size_t>();
    if (!entry.at("sec_idx").is_null()) p.secondary = entry.at("sec_idx").get<std::size_t>();
    p.level = parse_level(entry.at("level").get<std::string>());
    p.target = entry.at("target_idx").get<std::size_t>();
    r.alignment.pairs.push_back(p);
  }
  if (j.contains("ext_labels") && !j.at("ext_labels").is_null()) {
    r.ext_labels = ExtractionLabelSet{j.at("ext_labels").get<std::vector<std::size_t>>()};
  }
  return r;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::vector<CandidateRecord> read_candidates(const std::string& path) {
  return read_jsonl<CandidateRecord>(path, parse_candidate_line);
}

std::vector<SummaryRecord> read_summaries(const std::string& path) {
  return read_jsonl<SummaryRecord>(path, parse_summary_line);
}

std::vector<AlignmentRecord> read_alignments(const std::string& path) {
  return read_jsonl<AlignmentRecord>(path, parse_alignment_line);
}

}  // namespace condense
