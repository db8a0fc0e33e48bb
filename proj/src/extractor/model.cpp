#include "condense/extractor/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "condense/error.hpp"
#include "condense/nn/checkpoint.hpp"
#include "condense/nn/ops.hpp"

namespace condense::inline CONDENSE_PRECISION {

using namespace nn;

nlohmann::json ExtractorConfig::to_json() const {
  return {{"vocab_size", vocab_size}, {"emb_dim", emb_dim},       {"windows", windows},
          {"filters", filters},       {"doc_hidden", doc_hidden}, {"dec_hidden", dec_hidden},
          {"att_dim", att_dim},       {"mask_repeats", mask_repeats},
          {"max_steps", max_steps},   {"value_head", value_head}};
}

ExtractorConfig ExtractorConfig::from_json(const nlohmann::json& j) {
  ExtractorConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.emb_dim = j.at("emb_dim").get<std::size_t>();
    c.windows = j.at("windows").get<std::vector<std::size_t>>();
    c.filters = j.at("filters").get<std::size_t>();
    c.doc_hidden = j.at("doc_hidden").get<std::size_t>();
    c.dec_hidden = j.at("dec_hidden").get<std::size_t>();
    c.att_dim = j.at("att_dim").get<std::size_t>();
    c.mask_repeats = j.at("mask_repeats").get<bool>();
    c.max_steps = j.at("max_steps").get<std::size_t>();
    c.value_head = j.at("value_head").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("extractor config: ") + e.what());
  }
  return c;
}

ExtractorModel::ExtractorModel(const ExtractorConfig& config, std::uint64_t seed,
                               const std::string& prefix)
    : config_(config), prefix_(prefix) {
  if (config.vocab_size == 0) throw ConfigError("extractor vocabulary size is zero");
  if (config.windows.empty() || config.filters == 0) {
    throw ConfigError("extractor CNN needs windows and filters");
  }
  if (config.max_steps == 0) throw ConfigError("max_steps must be at least 1");
  Rng rng(seed);
  const std::size_t mem = config.mem_dim();
  const std::string& p = prefix;
  embedding_ = Embedding::create(store_, p + ".embedding", config.vocab_size, config.emb_dim, rng);
  cnn_ = TemporalCnn::create(store_, p + ".cnn", config.emb_dim, config.windows, config.filters, rng);
  doc_encoder_ = BiLstm::create(store_, p + ".doc", config.local_dim(), config.doc_hidden, rng);
  pointer_lstm_ = LstmCell::create(store_, p + ".pointer", mem, config.dec_hidden, rng);
  go_ = &store_.add(p + ".go", mem, 1);
  init_uniform(*go_, -0.1, 0.1, rng);
  init_h_ = &store_.add(p + ".init_h", config.dec_hidden, 1);
  init_c_ = &store_.add(p + ".init_c", config.dec_hidden, 1);
  stop_ = &store_.add(p + ".stop", mem, 1);
  init_uniform(*stop_, -0.1, 0.1, rng);
  glimpse_key_ = Linear::create(store_, p + ".glimpse_key", mem, config.att_dim, rng, false);
  glimpse_query_ = Linear::create(store_, p + ".glimpse_query", config.dec_hidden, config.att_dim, rng, false);
  glimpse_v_ = &store_.add(p + ".glimpse_v", config.att_dim, 1);
  init_xavier(*glimpse_v_, config.att_dim, 1, rng);
  pointer_key_ = Linear::create(store_, p + ".pointer_key", mem, config.att_dim, rng, false);
  pointer_query_ = Linear::create(store_, p + ".pointer_query", config.att_dim, config.att_dim, rng, false);
  pointer_v_ = &store_.add(p + ".pointer_v", config.att_dim, 1);
  init_xavier(*pointer_v_, config.att_dim, 1, rng);
  if (config.value_head) {
    // zero head: an untrained critic predicts 0
    value_ = Linear::create(store_, p + ".value", config.att_dim, 1, rng);
    value_.weight->value.fill(Real(0));
  }
}

MemoryBank ExtractorModel::encode_candidates(Graph& g, const std::vector<CandidateSet>& sets,
                                             const Vocabulary& vocab,
                                             const WarningSink& warn) const {
  const ProxyDocument proxy = make_proxy(sets);  // validates set sizes
  MemoryBank bank;
  bank.candidates = proxy.size();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    std::vector<Var> members;
    for (std::size_t j = 0; j < sets[i].size(); ++j) {
      const Sentence& s = sets[i][j];
      Var rows;
      if (s.empty()) {
        if (warn) warn("empty candidate " + std::to_string(i) + "." + std::to_string(j) + " zero-padded");
        rows = g.constant(Tensor(cnn_.widest(), config_.emb_dim));
      } else {
        const EncodedSequence enc = encode(s, vocab);
        rows = embedding_.lookup_rows(g, enc.fixed_ids);
      }
      members.push_back(cnn_.encode(g, rows));
    }
    bank.set_reps.push_back(mean(members));
    bank.local.insert(bank.local.end(), members.begin(), members.end());
  }
  bank.doc_reps = doc_encoder_.run(g, bank.set_reps).states;

  std::vector<Var> rows;
  rows.reserve(bank.size());
  for (std::size_t l = 0; l < proxy.size(); ++l) {
    rows.push_back(concat({bank.local[l], bank.doc_reps[proxy.slots[l].first]}));
  }
  rows.push_back(g.param(*stop_));
  bank.rows = stack_rows(rows);
  bank.keys_g = matmul(bank.rows, transpose(g.param(*glimpse_key_.weight)));
  bank.keys_p = matmul(bank.rows, transpose(g.param(*pointer_key_.weight)));
  return bank;
}

LstmState ExtractorModel::initial_state(Graph& g) const {
  return LstmState{g.param(*init_h_), g.param(*init_c_)};
}

Var ExtractorModel::go(Graph& g) const { return g.param(*go_); }

PointerStep ExtractorModel::step(Graph& g, const MemoryBank& bank, const LstmState& state,
                                 Var input, std::vector<bool> masked) const {
  if (masked.size() != bank.size()) {
    throw ShapeError("pointer mask of " + std::to_string(masked.size()) + " for a bank of " +
                     std::to_string(bank.size()));
  }
  masked[bank.stop()] = false;
  PointerStep out;
  out.state = pointer_lstm_.step(g, input, state);
  const Var z = out.state.h;
  const Var a = matmul(tanh(add_row_broadcast(bank.keys_g, glimpse_query_(g, z))),
                       g.param(*glimpse_v_));
  out.attention = softmax(a);
  out.glimpse = matmul(transpose(bank.keys_g), out.attention);
  const Var u = matmul(tanh(add_row_broadcast(bank.keys_p, pointer_query_(g, out.glimpse))),
                       g.param(*pointer_v_));
  out.dist = masked_softmax(u, masked);
  return out;
}

Var ExtractorModel::value(Graph& g, Var glimpse) const {
  if (!config_.value_head) throw ConfigError("extractor has no value head");
  return value_(g, glimpse);
}

std::size_t ExtractorModel::load_word_vectors(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vectors " + path);
  Parameter& table = *embedding_.table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t found = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (values.size() != config_.emb_dim) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(config_.emb_dim) + " values, got " +
                      std::to_string(values.size()));
    }
    if (!vocab.contains(token)) continue;
    const auto id = static_cast<std::size_t>(vocab.id(token));
    if (id >= table.value.rows()) continue;
    for (std::size_t d = 0; d < values.size(); ++d) table.value(id, d) = static_cast<Real>(values[d]);
    ++found;
  }
  return found;
}

void ExtractorModel::save(const std::string& path, nlohmann::json meta) const {
  meta["model"] = "extractor";
  meta["prefix"] = prefix_;
  meta["config"] = config_.to_json();
  save_checkpoint(path, store_, meta);
}

ExtractorModel ExtractorModel::load(const std::string& path, const std::string& prefix) {
  const auto meta = read_checkpoint_meta(path);
  if (meta.value("model", "") != "extractor") {
    throw DataError(path + ": not an extractor checkpoint");
  }
  const std::string stored = meta.value("prefix", prefix);
  ExtractorModel model(ExtractorConfig::from_json(meta.at("config")), 0, stored);
  load_checkpoint(path, model.store_);
  return model;
}

std::vector<bool> selection_mask(const MemoryBank& bank, const std::vector<std::size_t>& selected,
                                 const ExtractorConfig& config) {
  std::vector<bool> masked(bank.size(), false);
  if (selected.size() >= config.max_steps) {
    std::fill(masked.begin(), masked.end() - 1, true);
  } else if (config.mask_repeats) {
    for (std::size_t s : selected) masked[s] = true;
  }
  return masked;
}

SummaryHypothesis extract_greedy(const ExtractorModel& model, const std::vector<CandidateSet>& sets,
                                 const Vocabulary& vocab) {
  Graph g(GradMode::kNone);
  const MemoryBank bank = model.encode_candidates(g, sets, vocab);
  const ProxyDocument proxy = make_proxy(sets);
  SummaryHypothesis out;
  LstmState state = model.initial_state(g);
  Var input = model.go(g);
  while (true) {
    const PointerStep step =
        model.step(g, bank, state, input, selection_mask(bank, out.slots, model.config()));
    const Tensor& d = step.dist.value();
    const auto best = static_cast<std::size_t>(std::max_element(d.data(), d.data() + d.size()) - d.data());
    out.probs.push_back(d[best]);
    if (best == bank.stop()) break;
    out.slots.push_back(best);
    out.sentences.push_back(proxy.candidates[best]);
    if (out.slots.size() >= model.config().max_steps) {
      out.truncated = true;
      break;
    }
    state = step.state;
    input = row(bank.rows, best);
  }
  return out;
}

}  // namespace condense::inline CONDENSE_PRECISION
