#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "condense/abstractor/model.hpp"

namespace condense::inline CONDENSE_PRECISION {

struct MlTrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 5e-4;
  double clip = 2.0;
  std::uint64_t seed = 1;
  bool shuffle = true;
  std::string checkpoint_path;  // best checkpoint written here when non-empty
};

struct AbstractorEpoch {
  std::size_t epoch = 0;
  double train_nll = 0;  // per target token
  double token_accuracy = 0;
  double valid_nll = 0;  // per target token; NaN without validation data
};

struct AbstractorTrainLog {
  std::vector<AbstractorEpoch> epochs;
  std::size_t best_epoch = 0;
};

/// Mean per-token NLL and teacher-forced accuracy, without updating.
AbstractorEpoch evaluate_abstractor(const AbstractorModel& model,
                                    const std::vector<AbstractorExample>& examples);

/// Teacher-forced maximum likelihood with Adam and global-norm clipping.
/// The model ends holding the weights of the best epoch (lowest validation
/// NLL, or training NLL without validation data).
AbstractorTrainLog train_abstractor(AbstractorModel& model,
                                    const std::vector<AbstractorExample>& train,
                                    const std::vector<AbstractorExample>& valid,
                                    const MlTrainConfig& config,
                                    const std::function<void(const AbstractorEpoch&)>& on_epoch = {});

}  // namespace condense::inline CONDENSE_PRECISION
