#pragma once

// Advantage actor-critic fine-tuning of the extractor.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "condense/extractor/model.hpp"
#include "condense/nn/optim.hpp"

namespace condense::inline CONDENSE_PRECISION {

struct Trajectory {
  std::vector<std::size_t> actions;  // bank rows; the last is the stop row
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> returns;
  std::vector<double> values;
  bool truncated = false;  // stop forced by max_steps
};

/// Inverse-CDF draw from a categorical distribution.
std::size_t sample_index(std::span<const double> probs, Rng& rng);

/// Samples from the masked pointer distribution until stop. After max_steps
/// selections only the stop row remains, which is then taken with
/// log-probability 0.
Trajectory rollout(const ExtractorModel& policy, const std::vector<CandidateSet>& sets,
                   const Vocabulary& vocab, Rng& rng);

/// Marginal ROUGE-L F1 gains for the first m selections, zero for later
/// ones, and ROUGE-1 F1 of the whole selection for the stop step. Returns
/// |selected| + 1 rewards.
std::vector<double> compute_rewards(const std::vector<Sentence>& selected,
                                    const ReferenceSummary& reference);

/// R_t = r_t + gamma * R_{t+1}, with R_{T+1} = 0.
std::vector<double> compute_returns(const std::vector<double>& rewards, double gamma);

/// Pointer steps taken while replaying `actions` (teacher forcing); step t
/// has seen the first t - 1 actions.
std::vector<PointerStep> replay(nn::Graph& g, const ExtractorModel& model, const MemoryBank& bank,
                                const std::vector<std::size_t>& actions);

/// Mean over steps of -log pi(a_t) * A_t; the advantages are constants.
nn::Var policy_loss(const std::vector<nn::Var>& log_probs, const std::vector<double>& advantages,
                    double steps);

struct RlDocument {
  std::vector<CandidateSet> sets;
  ReferenceSummary reference;
};

struct A2cConfig {
  double gamma = 0.95;
  double policy_lr = 5e-5;
  double critic_lr = 5e-5;
  double clip = 2.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  bool whiten_advantages = false;
  std::uint64_t seed = 1;
  std::string checkpoint_path;  // best policy written here when non-empty
};

struct A2cLosses {
  double policy_loss = 0;
  double critic_loss = 0;
  double mean_reward = 0;  // undiscounted episode reward
};

class A2cTrainer {
 public:
  /// Throws ConfigError if policy and critic share parameters.
  A2cTrainer(ExtractorModel& policy, ExtractorModel& critic, const Vocabulary& vocab,
             const A2cConfig& config);

  /// Fills rewards, returns and values of each trajectory and applies one
  /// update to both networks.
  A2cLosses update(const std::vector<const RlDocument*>& docs, std::vector<Trajectory>& batch);

  /// Samples one trajectory per document and updates.
  A2cLosses step(const std::vector<const RlDocument*>& docs, Rng& rng);

 private:
  ExtractorModel& policy_;
  ExtractorModel& critic_;
  const Vocabulary& vocab_;
  A2cConfig config_;
  nn::Adam policy_opt_;
  nn::Adam critic_opt_;
};

/// Mean ROUGE-L F1 of greedy extractions.
double validation_rouge_l(const ExtractorModel& policy, const std::vector<RlDocument>& docs,
                          const Vocabulary& vocab);

struct RlEpoch {
  std::size_t epoch = 0;  // 0 is the pre-RL evaluation
  double mean_reward = 0;
  double policy_loss = 0;
  double critic_loss = 0;
  double val_rouge_l = 0;
};

struct RlTrainLog {
  std::vector<RlEpoch> epochs;
  std::size_t best_epoch = 0;
  std::vector<double> episode_rewards;
};

/// The policy ends holding the weights with the best validation ROUGE-L,
/// which may be the starting weights.
RlTrainLog train_rl(ExtractorModel& policy, ExtractorModel& critic, const Vocabulary& vocab,
                    const std::vector<RlDocument>& train, const std::vector<RlDocument>& valid,
                    const A2cConfig& config,
                    const std::function<void(const RlEpoch&)>& on_epoch = {});

/// CSV with columns epoch, mean_reward, policy_loss, critic_loss, val_rouge_l.
void write_rl_log(const std::string& path, const RlTrainLog& log);

}  // namespace condense::inline CONDENSE_PRECISION
