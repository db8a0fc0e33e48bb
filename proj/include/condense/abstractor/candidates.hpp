#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "condense/abstractor/beam.hpp"
#include "condense/cache.hpp"

namespace condense::inline CONDENSE_PRECISION {

enum class Strategy { kTopK, kLongShort, kCompressCtrl, kTwoToOne };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct CandidateOptions {
  Strategy strategy = Strategy::kCompressCtrl;
  std::size_t k = 2;
  BeamConfig beam;
};

/// Candidate set for sentence `index`: the original followed by k condensed
/// versions. Degenerate cases (too few hypotheses, a single-sentence
/// document under two-to-one) are reported through `warn`.
CandidateSet generate_candidate_set(const AbstractorModel& model, const Vocabulary& vocab,
                                    const Document& doc, std::size_t index,
                                    const CandidateOptions& options,
                                    const WarningSink& warn = {});

CandidateRecord generate_candidates(const AbstractorModel& model, const Vocabulary& vocab,
                                    const Document& doc, const CandidateOptions& options,
                                    const WarningSink& warn = {});

/// Runs documents on `workers` threads; output order equals input order.
std::vector<CandidateRecord> generate_candidates(const AbstractorModel& model,
                                                 const Vocabulary& vocab,
                                                 const std::vector<Document>& docs,
                                                 const CandidateOptions& options,
                                                 std::size_t workers,
                                                 const WarningSink& warn = {});

}  // namespace condense::inline CONDENSE_PRECISION
