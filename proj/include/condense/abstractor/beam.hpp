#pragma once

// Greedy and diverse beam search over the abstractor.
//
// Diverse search splits the beam into groups decoded step-synchronously in
// order. Inside a group, expansions of one parent are penalized by
// penalty * (sibling rank), and every group pays penalty * (number of earlier
// groups that chose the same token at this step). With penalty 0 and one
// group this is plain beam search; with groups == beam the first group is
// exactly greedy decoding.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "condense/abstractor/model.hpp"

namespace condense::inline CONDENSE_PRECISION {

struct BeamConfig {
  std::size_t beam = 5;
  std::size_t groups = 5;
  double penalty = 1.0;
  std::size_t max_length = 30;
};

struct Hypothesis {
  std::vector<std::int32_t> tokens;  // extended ids; ends with EOS when finished
  double log_prob = 0;
  bool finished = false;

  /// Tokens excluding the trailing EOS.
  std::vector<std::int32_t> content() const;
  /// log_prob divided by the token count (EOS included).
  double normalized() const;
};

struct BeamResult {
  std::vector<Hypothesis> hypotheses;  // best first
  bool truncated = false;  // nothing finished; best unfinished returned
};

Hypothesis greedy_decode(const AbstractorModel& model, const EncodedSequence& source,
                         std::optional<CompressionLevel> level, std::size_t max_length = 30);

BeamResult diverse_beam_search(const AbstractorModel& model, const EncodedSequence& source,
                               const BeamConfig& config,
                               std::optional<CompressionLevel> level = std::nullopt);

}  // namespace condense::inline CONDENSE_PRECISION
