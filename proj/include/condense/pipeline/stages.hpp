#pragma once

// Stage runners behind the command-line subcommands. Each stage reads the
// artifacts of earlier stages from the output directory, writes its own, and
// leaves a <stage>.manifest.json next to them.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "condense/cache.hpp"
#include "condense/corpus.hpp"
#include "condense/pipeline/config.hpp"
#include "condense/rouge.hpp"

namespace condense {

/// File names inside the output directory.
struct ArtifactPaths {
  std::string dir;

  std::string vocab() const;
  std::string alignments(Split split) const;
  std::string abstractor() const;
  std::string candidates(Split split) const;
  std::string extractor() const;
  std::string extractor_rl() const;
  std::string critic() const;
  std::string rl_log() const;
  std::string summaries(Split split) const;
  std::string manifest(const std::string& stage) const;
};

void run_align(const PipelineConfig& config, std::ostream& log);
void run_train_abstractor(const PipelineConfig& config, std::ostream& log);
void run_gen_candidates(const PipelineConfig& config, std::ostream& log);
void run_pretrain_extractor(const PipelineConfig& config, std::ostream& log);
void run_train_rl(const PipelineConfig& config, std::ostream& log);
void run_summarize(const PipelineConfig& config, std::ostream& log);

struct EvaluationReport {
  std::size_t documents = 0;
  RougeScore rouge1, rouge2, rouge_l;  // document means, in [0, 1]
  std::size_t original = 0;            // selections of version 0
  std::size_t condensed = 0;
  double avg_tokens = 0;
  double avg_sentences = 0;

  double original_percent() const;
  double condensed_percent() const;
};

/// Scores summaries against references matched by id. `set_sizes[i]` is the
/// candidate-set size of summaries[i], used to tell original from condensed
/// selections.
EvaluationReport evaluate_summaries(const std::vector<SummaryRecord>& summaries,
                                    const std::vector<CorpusRecord>& references,
                                    const std::vector<std::size_t>& set_sizes);

/// ROUGE F1 x100 with two decimals; with `recall`, also recall scores,
/// Org.% / Con.% with one decimal and average summary length.
std::string format_report(const EvaluationReport& report, bool recall);

EvaluationReport run_evaluate(const PipelineConfig& config, bool recall, std::ostream& out,
                              std::ostream& log);

/// Fails with an error naming `stage` when `path` does not exist.
void require_artifact(const std::string& path, const std::string& stage);

}  // namespace condense
