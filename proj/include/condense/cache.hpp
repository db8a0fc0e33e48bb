#pragma once

// JSON-lines artifacts exchanged between pipeline stages.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "condense/align.hpp"
#include "condense/corpus.hpp"

namespace condense {

/// {"id":..., "sets":[[orig, cand1, ...]...], "strategy":...}; sentences are
/// space-joined token strings.
struct CandidateRecord {
  std::string id;
  std::string strategy;
  std::vector<CandidateSet> sets;
};

/// {"id":..., "summary":[sentence...], "slots":[l_1, ...]}
struct SummaryRecord {
  std::string id;
  std::vector<Sentence> summary;
  std::vector<std::size_t> slots;
};

/// {"id":..., "pairs":[{"src_idx", "sec_idx", "level", "target_idx"}...],
///  "ext_labels":[...] or null}
struct AlignmentRecord {
  DocumentAlignment alignment;
  std::optional<ExtractionLabelSet> ext_labels;
};

std::string to_json_line(const CandidateRecord& record);
std::string to_json_line(const SummaryRecord& record);
std::string to_json_line(const AlignmentRecord& record);

CandidateRecord parse_candidate_line(const std::string& line);
SummaryRecord parse_summary_line(const std::string& line);
AlignmentRecord parse_alignment_line(const std::string& line);

void write_lines(const std::string& path, const std::vector<std::string>& lines);

template <class Record>
void write_records(const std::string& path, const std::vector<Record>& records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(to_json_line(r));
  write_lines(path, lines);
}

std::vector<CandidateRecord> read_candidates(const std::string& path);
std::vector<SummaryRecord> read_summaries(const std::string& path);
std::vector<AlignmentRecord> read_alignments(const std::string& path);

}  // namespace condense
