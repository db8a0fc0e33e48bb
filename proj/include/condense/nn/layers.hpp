#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "condense/nn/graph.hpp"
#include "condense/nn/ops.hpp"
#include "condense/rng.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

void init_uniform(Parameter& p, double lo, double hi, Rng& rng);
/// Glorot uniform, bound sqrt(6 / (fan_in + fan_out)).
void init_xavier(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// y = W x + b.
struct Linear {
  Parameter* weight = nullptr;  // out x in
  Parameter* bias = nullptr;    // out x 1, may be null

  static Linear create(ParameterStore& store, const std::string& name,
                       std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);
  Var operator()(Graph& g, Var x) const;
  std::size_t in() const { return weight->value.cols(); }
  std::size_t out() const { return weight->value.rows(); }
};

struct Embedding {
  Parameter* table = nullptr;  // vocab x dim

  /// Entries drawn from uniform(-0.05, 0.05).
  static Embedding create(ParameterStore& store, const std::string& name,
                          std::size_t vocab, std::size_t dim, Rng& rng);
  Var lookup(Graph& g, std::int32_t id) const;
  /// L x dim matrix.
  Var lookup_rows(Graph& g, std::span<const std::int32_t> ids) const;
  std::size_t dim() const { return table->value.cols(); }
  std::size_t vocab() const { return table->value.rows(); }
};

/// Xavier weights, forget-gate bias 1, other biases 0.
struct LstmCell {
  Parameter* weight = nullptr;  // 4H x (I + H)
  Parameter* bias = nullptr;    // 4H x 1

  static LstmCell create(ParameterStore& store, const std::string& name,
                         std::size_t input, std::size_t hidden, Rng& rng);
  LstmState step(Graph& g, Var x, LstmState state) const;
  LstmState zero_state(Graph& g) const;
  std::size_t hidden() const { return bias->value.rows() / 4; }
  std::size_t input() const { return weight->value.cols() - hidden(); }
};

struct BiLstmOutput {
  std::vector<Var> states;  // [forward_t ; backward_t] per position
  LstmState forward_final;  // after the last position
  LstmState backward_final; // after the first position
};

/// Two LSTMs reading left-to-right and right-to-left.
struct BiLstm {
  LstmCell forward;
  LstmCell backward;

  static BiLstm create(ParameterStore& store, const std::string& name,
                       std::size_t input, std::size_t hidden_per_direction, Rng& rng);
  BiLstmOutput run(Graph& g, const std::vector<Var>& inputs) const;
  std::size_t output_dim() const { return forward.hidden() + backward.hidden(); }
};

/// Temporal CNN sentence encoder with max-over-time pooling.
struct TemporalCnn {
  std::vector<std::size_t> windows;
  std::vector<Parameter*> weights;  // filters x (window * dim)
  std::vector<Parameter*> biases;   // filters x 1

  static TemporalCnn create(ParameterStore& store, const std::string& name,
                            std::size_t dim, std::span<const std::size_t> windows,
                            std::size_t filters, Rng& rng);
  /// rows: L x dim word embeddings; returns (windows * filters) x 1.
  Var encode(Graph& g, Var rows) const;
  std::size_t output_dim() const;
  std::size_t widest() const;
};

}  // namespace condense::inline CONDENSE_PRECISION::nn
