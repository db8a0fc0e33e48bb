#pragma once

// Pointer-generator sentence condenser: BiLSTM encoder, LSTM decoder with
// additive attention, and a copy gate mixing the vocabulary softmax with the
// attention mass over source positions. The compression-controllable variant
// feeds a level embedding next to the previous token at every step.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "condense/align.hpp"
#include "condense/corpus.hpp"
#include "condense/nn/graph.hpp"
#include "condense/nn/layers.hpp"
#include "json.hpp"

namespace condense::inline CONDENSE_PRECISION {

struct AbstractorConfig {
  std::size_t vocab_size = 0;
  std::size_t emb_dim = 128;
  std::size_t enc_hidden = 256;  // per direction
  std::size_t dec_hidden = 256;
  std::size_t att_dim = 256;
  std::size_t level_dim = 128;
  bool controllable = false;

  nlohmann::json to_json() const;
  static AbstractorConfig from_json(const nlohmann::json& j);
};

/// Encoder output for one input sentence.
struct EncodedSource {
  nn::Var states;  // L x 2*enc_hidden
  nn::Var keys;    // L x att_dim, the attention projection of `states`
  nn::LstmState initial;
  std::vector<std::int32_t> extended_ids;
  std::size_t extended_size = 0;  // vocab_size + number of source OOVs
};

struct DecodeStep {
  nn::LstmState state;
  nn::Var dist;        // extended_size x 1
  nn::Var vocab_dist;  // vocab_size x 1
  nn::Var attention;   // L x 1
  nn::Var p_gen;       // 1 x 1
};

class AbstractorModel {
 public:
  AbstractorModel(const AbstractorConfig& config, std::uint64_t seed);

  const AbstractorConfig& config() const { return config_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }

  EncodedSource encode(nn::Graph& g, const EncodedSequence& source) const;

  /// One decoder step. `prev_token` is an extended id; ids outside the
  /// fixed vocabulary are embedded as UNK. `level` must be given exactly
  /// when the model is compression-controllable.
  DecodeStep decode_step(nn::Graph& g, const EncodedSource& source, const nn::LstmState& state,
                         std::int32_t prev_token, std::optional<CompressionLevel> level) const;

  void save(const std::string& path, nlohmann::json meta = {}) const;
  static AbstractorModel load(const std::string& path);

  // exposed for tests that pin the copy gate
  nn::Parameter& gate_bias() { return *gate_.bias; }
  nn::Parameter& level_table() { return *levels_.table; }

 private:
  AbstractorConfig config_;
  nn::ParameterStore store_;
  nn::Embedding embedding_;
  nn::Embedding levels_;
  nn::BiLstm encoder_;
  nn::Linear bridge_h_;
  nn::Linear bridge_c_;
  nn::LstmCell decoder_;
  nn::Linear att_key_;
  nn::Linear att_query_;
  nn::Parameter* att_v_ = nullptr;
  nn::Linear output_;
  nn::Linear gate_;
};

/// Training view of an AbstractorPair.
struct AbstractorExample {
  EncodedSequence source;
  std::vector<std::int32_t> target;  // extended ids, ends with EOS
  std::optional<CompressionLevel> level;
};

AbstractorExample make_example(const AbstractorPair& pair, const Vocabulary& vocab,
                               bool controllable, std::size_t max_target = 30);

struct ExampleLoss {
  nn::Var loss;  // summed NLL over target tokens
  std::size_t tokens = 0;
  std::size_t correct = 0;  // argmax hits under teacher forcing
};

ExampleLoss teacher_forced_loss(nn::Graph& g, const AbstractorModel& model,
                                const AbstractorExample& example);

}  // namespace condense::inline CONDENSE_PRECISION
