#include "condense/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "condense/error.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

void init_uniform(Parameter& p, double lo, double hi, Rng& rng) {
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    p.value[i] = static_cast<Real>(rng.uniform(lo, hi));
  }
}

void init_xavier(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  init_uniform(p, -bound, bound, rng);
}

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng, bool with_bias) {
  Linear layer;
  layer.weight = &store.add(name + ".weight", out, in);
  init_xavier(*layer.weight, in, out, rng);
  if (with_bias) layer.bias = &store.add(name + ".bias", out, 1);
  return layer;
}

Var Linear::operator()(Graph& g, Var x) const {
  Var y = matmul(g.param(*weight), x);
  return bias ? add(y, g.param(*bias)) : y;
}

Embedding Embedding::create(ParameterStore& store, const std::string& name,
                            std::size_t vocab, std::size_t dim, Rng& rng) {
  Embedding e;
  e.table = &store.add(name, vocab, dim);
  init_uniform(*e.table, -0.05, 0.05, rng);
  return e;
}

Var Embedding::lookup(Graph& g, std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= vocab()) {
    throw DataError("embedding id " + std::to_string(id) + " outside table of " +
                    std::to_string(vocab()));
  }
  return row(g.param(*table), static_cast<std::size_t>(id));
}

Var Embedding::lookup_rows(Graph& g, std::span<const std::int32_t> ids) const {
  return gather_rows(g.param(*table), ids);
}

LstmCell LstmCell::create(ParameterStore& store, const std::string& name,
                          std::size_t input, std::size_t hidden, Rng& rng) {
  LstmCell cell;
  cell.weight = &store.add(name + ".weight", 4 * hidden, input + hidden);
  init_xavier(*cell.weight, input + hidden, 4 * hidden, rng);
  cell.bias = &store.add(name + ".bias", 4 * hidden, 1);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) cell.bias->value[j] = Real(1);
  return cell;
}

LstmState LstmCell::step(Graph& g, Var x, LstmState state) const {
  return lstm_step(x, state, g.param(*weight), g.param(*bias));
}

LstmState LstmCell::zero_state(Graph& g) const {
  return LstmState{g.constant(Tensor(hidden(), 1)), g.constant(Tensor(hidden(), 1))};
}

BiLstm BiLstm::create(ParameterStore& store, const std::string& name, std::size_t input,
                      std::size_t hidden_per_direction, Rng& rng) {
  BiLstm bi;
  bi.forward = LstmCell::create(store, name + ".fwd", input, hidden_per_direction, rng);
  bi.backward = LstmCell::create(store, name + ".bwd", input, hidden_per_direction, rng);
  return bi;
}

BiLstmOutput BiLstm::run(Graph& g, const std::vector<Var>& inputs) const {
  if (inputs.empty()) throw ShapeError("BiLstm over an empty sequence");
  const std::size_t n = inputs.size();
  std::vector<Var> fwd(n);
  std::vector<Var> bwd(n);
  LstmState f = forward.zero_state(g);
  for (std::size_t t = 0; t < n; ++t) {
    f = forward.step(g, inputs[t], f);
    fwd[t] = f.h;
  }
  LstmState b = backward.zero_state(g);
  for (std::size_t t = n; t-- > 0;) {
    b = backward.step(g, inputs[t], b);
    bwd[t] = b.h;
  }
  BiLstmOutput out;
  out.states.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.states.push_back(concat({fwd[t], bwd[t]}));
  out.forward_final = f;
  out.backward_final = b;
  return out;
}

TemporalCnn TemporalCnn::create(ParameterStore& store, const std::string& name,
                                std::size_t dim, std::span<const std::size_t> windows,
                                std::size_t filters, Rng& rng) {
  TemporalCnn cnn;
  cnn.windows.assign(windows.begin(), windows.end());
  for (std::size_t w : cnn.windows) {
    const std::string base = name + ".w" + std::to_string(w);
    Parameter& weight = store.add(base + ".weight", filters, w * dim);
    init_xavier(weight, w * dim, filters, rng);
    cnn.weights.push_back(&weight);
    cnn.biases.push_back(&store.add(base + ".bias", filters, 1));
  }
  return cnn;
}

Var TemporalCnn::encode(Graph& g, Var rows) const {
  std::vector<Var> ws;
  std::vector<Var> bs;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    ws.push_back(g.param(*weights[i]));
    bs.push_back(g.param(*biases[i]));
  }
  return conv1d_temporal(rows, ws, bs, windows);
}

std::size_t TemporalCnn::output_dim() const {
  std::size_t total = 0;
  for (const Parameter* b : biases) total += b->value.rows();
  return total;
}

std::size_t TemporalCnn::widest() const {
  return windows.empty() ? 0 : *std::max_element(windows.begin(), windows.end());
}

}  // namespace condense::inline CONDENSE_PRECISION::nn
