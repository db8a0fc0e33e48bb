#pragma once

// Candidate encoder and two-hop pointer network.
//
// Each candidate is encoded by a temporal CNN (r_ij); a set's candidates are
// mean-pooled (r_i) and a BiLSTM over the sets gives document context h_i.
// Bank rows are [r_ij; h_i] in proxy order, followed by the trainable stop
// row. The pointer LSTM starts from a trainable state and GO input and is fed
// the bank row of each selection.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "condense/align.hpp"
#include "condense/corpus.hpp"
#include "condense/nn/graph.hpp"
#include "condense/nn/layers.hpp"
#include "json.hpp"

namespace condense::inline CONDENSE_PRECISION {

struct ExtractorConfig {
  std::size_t vocab_size = 0;
  std::size_t emb_dim = 128;
  std::vector<std::size_t> windows{3, 4, 5};
  std::size_t filters = 100;
  std::size_t doc_hidden = 256;  // per direction
  std::size_t dec_hidden = 256;
  std::size_t att_dim = 256;
  bool mask_repeats = true;
  std::size_t max_steps = 8;
  bool value_head = false;  // critic

  std::size_t local_dim() const { return filters * windows.size(); }
  std::size_t mem_dim() const { return local_dim() + 2 * doc_hidden; }

  nlohmann::json to_json() const;
  static ExtractorConfig from_json(const nlohmann::json& j);
};

struct MemoryBank {
  nn::Var rows;    // (N + 1) x d_mem, stop row last
  nn::Var keys_g;  // (N + 1) x d_att, rows times W_g1^T
  nn::Var keys_p;  // (N + 1) x d_att, rows times W_p1^T
  std::size_t candidates = 0;  // N
  std::vector<nn::Var> local;     // r_ij in proxy order
  std::vector<nn::Var> set_reps;  // r_i
  std::vector<nn::Var> doc_reps;  // h_i

  std::size_t size() const { return candidates + 1; }
  std::size_t stop() const { return candidates; }
};

struct PointerStep {
  nn::LstmState state;
  nn::Var glimpse;    // d_att x 1
  nn::Var attention;  // (N + 1) x 1, first hop
  nn::Var dist;       // (N + 1) x 1, extraction probabilities
};

class ExtractorModel {
 public:
  ExtractorModel(const ExtractorConfig& config, std::uint64_t seed,
                 const std::string& prefix = "ext");

  const ExtractorConfig& config() const { return config_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }

  /// Sets must share one size (k + 1). Empty candidates encode as zero rows
  /// of the widest window and are reported through `warn`.
  MemoryBank encode_candidates(nn::Graph& g, const std::vector<CandidateSet>& sets,
                               const Vocabulary& vocab, const WarningSink& warn = {}) const;

  nn::LstmState initial_state(nn::Graph& g) const;
  nn::Var go(nn::Graph& g) const;

  /// Advances LSTM2 on `input` and scores the bank. `masked` has one entry
  /// per bank row; the stop row is never masked.
  PointerStep step(nn::Graph& g, const MemoryBank& bank, const nn::LstmState& state,
                   nn::Var input, std::vector<bool> masked) const;

  /// Critic regression head on a glimpse vector.
  nn::Var value(nn::Graph& g, nn::Var glimpse) const;

  /// Warm-starts word embeddings from "token v1 ... vD" lines. Returns the
  /// number of vocabulary entries found.
  std::size_t load_word_vectors(const std::string& path, const Vocabulary& vocab);

  void save(const std::string& path, nlohmann::json meta = {}) const;
  static ExtractorModel load(const std::string& path, const std::string& prefix = "ext");

  // named handles for tests
  nn::Parameter& stop_row() { return *stop_; }
  nn::Parameter& value_weight() { return *value_.weight; }
  const nn::BiLstm& document_encoder() const { return doc_encoder_; }

 private:
  ExtractorConfig config_;
  std::string prefix_;
  nn::ParameterStore store_;
  nn::Embedding embedding_;
  nn::TemporalCnn cnn_;
  nn::BiLstm doc_encoder_;
  nn::LstmCell pointer_lstm_;
  nn::Parameter* go_ = nullptr;
  nn::Parameter* init_h_ = nullptr;
  nn::Parameter* init_c_ = nullptr;
  nn::Parameter* stop_ = nullptr;
  nn::Linear glimpse_key_;    // W_g1
  nn::Linear glimpse_query_;  // W_g2
  nn::Parameter* glimpse_v_ = nullptr;
  nn::Linear pointer_key_;    // W_p1
  nn::Linear pointer_query_;  // W_p2
  nn::Parameter* pointer_v_ = nullptr;
  nn::Linear value_;
};

struct SummaryHypothesis {
  std::vector<std::size_t> slots;  // selection order, stop excluded
  std::vector<Sentence> sentences;
  std::vector<double> probs;       // probability of each choice, stop included
  bool truncated = false;          // max_steps reached before stop
};

/// Selection mask after choosing `selected` slots; once `max_steps` slots are
/// chosen every candidate is masked, which forces the stop action.
std::vector<bool> selection_mask(const MemoryBank& bank, const std::vector<std::size_t>& selected,
                                 const ExtractorConfig& config);

SummaryHypothesis extract_greedy(const ExtractorModel& model, const std::vector<CandidateSet>& sets,
                                 const Vocabulary& vocab);

}  // namespace condense::inline CONDENSE_PRECISION
