#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "condense/abstractor/train.hpp"
#include "condense/extractor/model.hpp"

namespace condense::inline CONDENSE_PRECISION {

struct ExtractorExample {
  std::vector<CandidateSet> sets;
  std::vector<std::size_t> labels;  // proxy slots, stop not included
};

struct PointerLoss {
  nn::Var loss;  // summed NLL over labels plus the final stop
  std::size_t steps = 0;
  std::size_t correct = 0;
};

/// Supervised steps for `labels`: when repeats are masked, later repeats of
/// a label are dropped so that every target stays selectable.
std::vector<std::size_t> supervised_labels(const std::vector<std::size_t>& labels,
                                           const ExtractorConfig& config);

PointerLoss pointer_ml_loss(nn::Graph& g, const ExtractorModel& model,
                            const ExtractorExample& example, const Vocabulary& vocab);

struct ExtractorEpoch {
  std::size_t epoch = 0;
  double train_nll = 0;  // per supervised step
  double accuracy = 0;
  double valid_nll = 0;
  double valid_accuracy = 0;
};

struct ExtractorTrainLog {
  std::vector<ExtractorEpoch> epochs;
  std::size_t best_epoch = 0;
};

/// Mean per-step NLL and teacher-forced label accuracy (stop included).
ExtractorEpoch evaluate_extractor(const ExtractorModel& model,
                                  const std::vector<ExtractorExample>& examples,
                                  const Vocabulary& vocab);

ExtractorTrainLog pretrain_extractor(ExtractorModel& model, const Vocabulary& vocab,
                                     const std::vector<ExtractorExample>& train,
                                     const std::vector<ExtractorExample>& valid,
                                     const MlTrainConfig& config,
                                     const std::function<void(const ExtractorEpoch&)>& on_epoch = {});

}  // namespace condense::inline CONDENSE_PRECISION
