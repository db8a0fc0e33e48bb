#include "condense/abstractor/model.hpp"

#include <algorithm>

#include "condense/error.hpp"
#include "condense/nn/checkpoint.hpp"
#include "condense/nn/ops.hpp"

namespace condense::inline CONDENSE_PRECISION {

using namespace nn;

nlohmann::json AbstractorConfig::to_json() const {
  return {{"vocab_size", vocab_size}, {"emb_dim", emb_dim},     {"enc_hidden", enc_hidden},
          {"dec_hidden", dec_hidden}, {"att_dim", att_dim},     {"level_dim", level_dim},
          {"controllable", controllable}};
}

AbstractorConfig AbstractorConfig::from_json(const nlohmann::json& j) {
  AbstractorConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.emb_dim = j.at("emb_dim").get<std::size_t>();
    c.enc_hidden = j.at("enc_hidden").get<std::size_t>();
    c.dec_hidden = j.at("dec_hidden").get<std::size_t>();
    c.att_dim = j.at("att_dim").get<std::size_t>();
    c.level_dim = j.at("level_dim").get<std::size_t>();
    c.controllable = j.at("controllable").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("abstractor config: ") + e.what());
  }
  return c;
}

AbstractorModel::AbstractorModel(const AbstractorConfig& config, std::uint64_t seed)
    : config_(config) {
  if (config.vocab_size <= static_cast<std::size_t>(Vocabulary::kNumReserved)) {
    throw ConfigError("abstractor vocabulary too small");
  }
  Rng rng(seed);
  const std::size_t enc_out = 2 * config.enc_hidden;
  const std::size_t dec_in = config.emb_dim + (config.controllable ? config.level_dim : 0);
  embedding_ = Embedding::create(store_, "abs.embedding", config.vocab_size, config.emb_dim, rng);
  if (config.controllable) {
    levels_ = Embedding::create(store_, "abs.level", 2, config.level_dim, rng);
  }
  encoder_ = BiLstm::create(store_, "abs.encoder", config.emb_dim, config.enc_hidden, rng);
  bridge_h_ = Linear::create(store_, "abs.bridge_h", enc_out, config.dec_hidden, rng);
  bridge_c_ = Linear::create(store_, "abs.bridge_c", enc_out, config.dec_hidden, rng);
  decoder_ = LstmCell::create(store_, "abs.decoder", dec_in, config.dec_hidden, rng);
  att_key_ = Linear::create(store_, "abs.att_key", enc_out, config.att_dim, rng, false);
  att_query_ = Linear::create(store_, "abs.att_query", config.dec_hidden, config.att_dim, rng);
  att_v_ = &store_.add("abs.att_v", config.att_dim, 1);
  init_xavier(*att_v_, config.att_dim, 1, rng);
  output_ = Linear::create(store_, "abs.output", config.dec_hidden + enc_out, config.vocab_size, rng);
  gate_ = Linear::create(store_, "abs.gate", enc_out + config.dec_hidden + config.emb_dim, 1, rng);
}

EncodedSource AbstractorModel::encode(Graph& g, const EncodedSequence& source) const {
  if (source.fixed_ids.empty()) throw DataError("abstractor input sentence is empty");
  std::vector<Var> inputs;
  inputs.reserve(source.fixed_ids.size());
  for (std::int32_t id : source.fixed_ids) inputs.push_back(embedding_.lookup(g, id));
  const BiLstmOutput enc = encoder_.run(g, inputs);

  EncodedSource out;
  out.states = stack_rows(enc.states);
  out.keys = matmul(out.states, transpose(g.param(*att_key_.weight)));
  const Var final_state = concat({enc.forward_final.h, enc.backward_final.h});
  const Var final_cell = concat({enc.forward_final.c, enc.backward_final.c});
  out.initial = LstmState{bridge_h_(g, final_state), bridge_c_(g, final_cell)};
  out.extended_ids = source.extended_ids;
  out.extended_size = config_.vocab_size + source.oov_tokens.size();
  return out;
}

DecodeStep AbstractorModel::decode_step(Graph& g, const EncodedSource& source,
                                        const LstmState& state, std::int32_t prev_token,
                                        std::optional<CompressionLevel> level) const {
  if (level.has_value() != config_.controllable) {
    throw ConfigError(config_.controllable
                          ? "compression-controllable abstractor needs a level"
                          : "level given to an abstractor without compression control");
  }
  const std::int32_t fixed = prev_token >= static_cast<std::int32_t>(config_.vocab_size)
                                 ? Vocabulary::kUnk
                                 : prev_token;
  const Var x = embedding_.lookup(g, fixed);
  const Var input =
      level ? concat({x, levels_.lookup(g, static_cast<std::int32_t>(*level))}) : x;

  DecodeStep out;
  out.state = decoder_.step(g, input, state);
  const Var h = out.state.h;

  const Var energies = tanh(add_row_broadcast(source.keys, att_query_(g, h)));
  out.attention = softmax(matmul(energies, g.param(*att_v_)));
  const Var context = matmul(transpose(source.states), out.attention);

  out.vocab_dist = softmax(output_(g, concat({h, context})));
  out.p_gen = sigmoid(gate_(g, concat({context, h, x})));

  const Var generated = mul_scalar(out.p_gen, pad_rows(out.vocab_dist, source.extended_size));
  const Var copied = mul_scalar(affine(out.p_gen, Real(-1), Real(1)),
                                scatter_add(out.attention, source.extended_ids,
                                            source.extended_size));
  out.dist = add(generated, copied);
  return out;
}

void AbstractorModel::save(const std::string& path, nlohmann::json meta) const {
  meta["model"] = "abstractor";
  meta["config"] = config_.to_json();
  save_checkpoint(path, store_, meta);
}

AbstractorModel AbstractorModel::load(const std::string& path) {
  const auto meta = read_checkpoint_meta(path);
  if (meta.value("model", "") != "abstractor") {
    throw DataError(path + ": not an abstractor checkpoint");
  }
  AbstractorModel model(AbstractorConfig::from_json(meta.at("config")), 0);
  load_checkpoint(path, model.store_);
  return model;
}

AbstractorExample make_example(const AbstractorPair& pair, const Vocabulary& vocab,
                               bool controllable, std::size_t max_target) {
  AbstractorExample ex;
  ex.source = encode(pair.input(), vocab);
  Sentence target = pair.target;
  if (target.size() > max_target) target.resize(max_target);
  ex.target = encode_target(target, vocab, ex.source);
  ex.target.push_back(Vocabulary::kEos);
  if (controllable) ex.level = pair.level;
  return ex;
}

ExampleLoss teacher_forced_loss(Graph& g, const AbstractorModel& model,
                                const AbstractorExample& example) {
  const EncodedSource src = model.encode(g, example.source);
  LstmState state = src.initial;
  std::int32_t prev = Vocabulary::kBos;
  std::vector<Var> terms;
  ExampleLoss out;
  for (std::int32_t target : example.target) {
    const DecodeStep step = model.decode_step(g, src, state, prev, example.level);
    const Tensor& dist = step.dist.value();
    const auto best = static_cast<std::int32_t>(
        std::max_element(dist.data(), dist.data() + dist.size()) - dist.data());
    if (best == target) ++out.correct;
    ++out.tokens;
    terms.push_back(log(pick(step.dist, static_cast<std::size_t>(target))));
    state = step.state;
    prev = target;
  }
  out.loss = scale(sum(concat(terms)), Real(-1));
  return out;
}

}  // namespace condense::inline CONDENSE_PRECISION
