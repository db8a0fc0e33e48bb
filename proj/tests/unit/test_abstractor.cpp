#include <algorithm>
#include <cmath>
#include <map>

#include "condense/abstractor/candidates.hpp"
#include "condense/abstractor/train.hpp"
#include "condense/error.hpp"
#include "condense/nn/ops.hpp"
#include "doctest.h"
#include "support/synthetic.hpp"

using namespace condense;
using namespace condense::nn;

namespace {

constexpr std::size_t kAlphabet = 20;

AbstractorConfig small_config(const Vocabulary& vocab, bool controllable) {
  AbstractorConfig c;
  c.vocab_size = vocab.size();
  c.emb_dim = 16;
  c.enc_hidden = 16;
  c.dec_hidden = 16;
  c.att_dim = 16;
  c.level_dim = 8;
  c.controllable = controllable;
  return c;
}

std::vector<AbstractorExample> copy_examples(const Vocabulary& vocab, std::size_t n,
                                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AbstractorExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = synthetic::random_sentence(rng, kAlphabet, 4, 8);
    const auto level = i % 2 ? CompressionLevel::kHigh : CompressionLevel::kLow;
    out.push_back(make_example(synthetic::compression_pair(s, level), vocab, false));
  }
  return out;
}

// A briefly trained model whose decodes terminate.
const AbstractorModel& trained_model() {
  static const AbstractorModel model = [] {
    const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
    AbstractorModel m(small_config(vocab, false), 8);
    MlTrainConfig tc;
    tc.epochs = 40;
    tc.lr = 5e-3;
    train_abstractor(m, copy_examples(vocab, 64, 2), {}, tc);
    return m;
  }();
  return model;
}

double total(const Tensor& t) {
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
  return s;
}

}  // namespace

TEST_CASE("decode distributions are normalized and copy out-of-vocabulary tokens") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel model(small_config(vocab, false), 1);
  const EncodedSequence src = encode({"w1", "zebra", "w2", "yak"}, vocab);
  Graph g(GradMode::kNone);
  const EncodedSource enc = model.encode(g, src);
  LstmState state = enc.initial;
  std::int32_t prev = Vocabulary::kBos;
  for (int t = 0; t < 6; ++t) {
    const DecodeStep step = model.decode_step(g, enc, state, prev, std::nullopt);
    const Tensor& d = step.dist.value();
    REQUIRE(d.size() == vocab.size() + 2);
    CHECK(total(d) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(*std::min_element(d.data(), d.data() + d.size()) >= 0.0f);
    CHECK(d[vocab.size()] > 0.0f);
    CHECK(d[vocab.size() + 1] > 0.0f);
    CHECK(step.p_gen.scalar() > 0.0f);
    CHECK(step.p_gen.scalar() < 1.0f);
    state = step.state;
    prev = static_cast<std::int32_t>(vocab.size() + (t % 2));
  }
}

TEST_CASE("a saturated copy gate leaves the vocabulary softmax") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  AbstractorModel model(small_config(vocab, false), 2);
  model.gate_bias().value[0] = 200.0f;
  const EncodedSequence src = encode({"w3", "zebra", "w4"}, vocab);
  Graph g(GradMode::kNone);
  const EncodedSource enc = model.encode(g, src);
  const DecodeStep step = model.decode_step(g, enc, enc.initial, Vocabulary::kBos, std::nullopt);
  REQUIRE(step.p_gen.scalar() == 1.0f);
  const Tensor& d = step.dist.value();
  const Tensor& v = step.vocab_dist.value();
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(d[i] == v[i]);
  CHECK(d[vocab.size()] == 0.0f);
}

TEST_CASE("compression level is required exactly for controllable models") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel plain(small_config(vocab, false), 3);
  AbstractorModel ctrl(small_config(vocab, true), 3);
  const EncodedSequence src = encode({"w1", "w2"}, vocab);
  Graph g(GradMode::kNone);
  const EncodedSource a = plain.encode(g, src);
  CHECK_THROWS_AS(plain.decode_step(g, a, a.initial, Vocabulary::kBos, CompressionLevel::kHigh),
                  ConfigError);
  const EncodedSource b = ctrl.encode(g, src);
  CHECK_THROWS_AS(ctrl.decode_step(g, b, b.initial, Vocabulary::kBos, std::nullopt), ConfigError);

  REQUIRE(ctrl.level_table().value.rows() == 2);
  const auto low = ctrl.decode_step(g, b, b.initial, Vocabulary::kBos, CompressionLevel::kLow);
  const auto high = ctrl.decode_step(g, b, b.initial, Vocabulary::kBos, CompressionLevel::kHigh);
  CHECK_FALSE(low.dist.value() == high.dist.value());
}

TEST_CASE("paper-sized configuration has a 2 x 128 level table") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  AbstractorConfig c;
  c.vocab_size = vocab.size();
  c.controllable = true;
  AbstractorModel model(c, 1);
  CHECK(model.level_table().value.rows() == 2);
  CHECK(model.level_table().value.cols() == 128);
}

TEST_CASE("training rejects an empty pair list and starts near uniform entropy") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  AbstractorModel model(small_config(vocab, false), 4);
  CHECK_THROWS_AS(train_abstractor(model, {}, {}, MlTrainConfig{}), ConfigError);

  const auto examples = copy_examples(vocab, 32, 6);
  const double initial = evaluate_abstractor(model, examples).train_nll;
  const double uniform = std::log(double(vocab.size()));
  CHECK(initial > 0.8 * uniform);
  CHECK(initial < 1.2 * uniform);
}

TEST_CASE("identical seeds give identical loss curves") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const auto examples = copy_examples(vocab, 16, 7);
  MlTrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  tc.lr = 1e-3;
  auto run = [&] {
    AbstractorModel m(small_config(vocab, false), 9);
    return train_abstractor(m, examples, examples, tc);
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.epochs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.epochs[i].train_nll == b.epochs[i].train_nll);
    CHECK(a.epochs[i].valid_nll == b.epochs[i].valid_nll);
  }
}

TEST_CASE("training keeps the best epoch and writes its checkpoint") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const auto examples = copy_examples(vocab, 16, 10);
  AbstractorModel m(small_config(vocab, false), 11);
  MlTrainConfig tc;
  tc.epochs = 5;
  tc.lr = 5e-3;
  tc.checkpoint_path = "test_abstractor_best.ckpt";
  const auto log = train_abstractor(m, examples, examples, tc);
  double best = 1e9;
  for (const auto& e : log.epochs) best = std::min(best, e.valid_nll);
  CHECK(log.epochs[log.best_epoch - 1].valid_nll == best);
  CHECK(evaluate_abstractor(m, examples).train_nll == doctest::Approx(best).epsilon(1e-6));
  const AbstractorModel loaded = AbstractorModel::load(tc.checkpoint_path);
  CHECK(evaluate_abstractor(loaded, examples).train_nll ==
        evaluate_abstractor(m, examples).train_nll);
  std::remove(tc.checkpoint_path.c_str());
}

namespace {

// Textbook beam search: keep the best `width` expansions by log-probability.
std::vector<Hypothesis> plain_beam(const AbstractorModel& model, const EncodedSequence& src,
                                   std::size_t width, std::size_t max_length) {
  Graph g(GradMode::kNone);
  const EncodedSource enc = model.encode(g, src);
  struct Item {
    Hypothesis h;
    LstmState s;
  };
  std::vector<Item> alive{{Hypothesis{}, enc.initial}};
  std::vector<Hypothesis> done;
  for (std::size_t t = 0; t < max_length && !alive.empty() && done.size() < width; ++t) {
    struct Cand {
      double lp;
      std::size_t parent;
      std::int32_t tok;
      LstmState s;
    };
    std::vector<Cand> cands;
    for (std::size_t p = 0; p < alive.size(); ++p) {
      const std::int32_t prev =
          alive[p].h.tokens.empty() ? Vocabulary::kBos : alive[p].h.tokens.back();
      const auto step = model.decode_step(g, enc, alive[p].s, prev, std::nullopt);
      for (std::size_t i = 0; i < step.dist.value().size(); ++i) {
        cands.push_back({alive[p].h.log_prob + std::log(double(step.dist.value()[i])), p,
                         static_cast<std::int32_t>(i), step.state});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& b) { return a.lp > b.lp; });
    std::vector<Item> next;
    for (const Cand& c : cands) {
      if (next.size() + done.size() >= width) break;
      Hypothesis h = alive[c.parent].h;
      h.tokens.push_back(c.tok);
      h.log_prob = c.lp;
      if (c.tok == Vocabulary::kEos) {
        h.finished = true;
        done.push_back(h);
      } else {
        next.push_back({h, c.s});
      }
    }
    alive = std::move(next);
  }
  std::sort(done.begin(), done.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.normalized() > b.normalized();
  });
  return done;
}

}  // namespace

TEST_CASE("beam of one is greedy decoding") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel& model = trained_model();
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    const auto src = encode(synthetic::random_sentence(rng, kAlphabet, 4, 8), vocab);
    const Hypothesis greedy = greedy_decode(model, src, std::nullopt);
    const BeamResult beam = diverse_beam_search(model, src, BeamConfig{1, 1, 1.0, 30});
    REQUIRE(beam.hypotheses.size() == 1);
    CHECK(beam.hypotheses[0].tokens == greedy.tokens);
    CHECK(beam.hypotheses[0].log_prob == greedy.log_prob);
  }
}

TEST_CASE("zero penalty reduces to plain beam search") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel& model = trained_model();
  Rng rng(13);
  for (int i = 0; i < 10; ++i) {
    const auto src = encode(synthetic::random_sentence(rng, kAlphabet, 4, 8), vocab);
    const auto expected = plain_beam(model, src, 3, 30);
    const auto got = diverse_beam_search(model, src, BeamConfig{3, 1, 0.0, 30});
    REQUIRE(got.hypotheses.size() == expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) {
      CHECK(got.hypotheses[j].tokens == expected[j].tokens);
    }
    // with several groups and no penalty every group repeats the same beam
    const auto grouped = diverse_beam_search(model, src, BeamConfig{6, 2, 0.0, 30});
    REQUIRE(grouped.hypotheses.size() == expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) {
      CHECK(grouped.hypotheses[j].tokens == expected[j].tokens);
    }
  }
}

TEST_CASE("diverse beam top-1 scores at least as well as greedy") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel& model = trained_model();
  Rng rng(14);
  int compared = 0;
  for (int i = 0; i < 50; ++i) {
    const auto src = encode(synthetic::random_sentence(rng, kAlphabet, 4, 8), vocab);
    const Hypothesis greedy = greedy_decode(model, src, std::nullopt);
    const BeamResult beam = diverse_beam_search(model, src, BeamConfig{});
    REQUIRE_FALSE(beam.hypotheses.empty());
    CHECK(beam.hypotheses.size() <= 5);
    for (std::size_t j = 1; j < beam.hypotheses.size(); ++j) {
      CHECK(beam.hypotheses[j - 1].normalized() >= beam.hypotheses[j].normalized());
      CHECK(beam.hypotheses[j].tokens.back() == Vocabulary::kEos);
    }
    if (!greedy.finished) continue;
    ++compared;
    CHECK(beam.hypotheses[0].normalized() >= greedy.normalized());
  }
  CHECK(compared >= 40);
}

TEST_CASE("unfinished decodes return the best partial hypothesis, flagged") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel& model = trained_model();
  const auto src = encode({"w1", "w2", "w3", "w4", "w5", "w6"}, vocab);
  const BeamResult r = diverse_beam_search(model, src, BeamConfig{3, 3, 1.0, 2});
  CHECK(r.truncated);
  REQUIRE(r.hypotheses.size() == 1);
  CHECK(r.hypotheses[0].tokens.size() == 2);
}

TEST_CASE("candidate sets hold the original plus k versions") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel& model = trained_model();
  Document doc;
  doc.id = "d";
  doc.sentences = {{"w1", "w2", "w3", "w4"}, {"w5", "w6", "w7", "w8", "w9"}, {"w10", "w11", "w12"}};
  for (Strategy s : {Strategy::kTopK, Strategy::kLongShort, Strategy::kTwoToOne}) {
    CandidateOptions opt;
    opt.strategy = s;
    const auto rec = generate_candidates(model, vocab, doc, opt);
    CHECK(rec.strategy == strategy_name(s));
    REQUIRE(rec.sets.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(rec.sets[i].size() == 3);
      CHECK(rec.sets[i][0] == doc.sentences[i]);
    }
    if (s == Strategy::kLongShort) {
      for (const auto& set : rec.sets) CHECK(set[1].size() >= set[2].size());
    }
  }
  CandidateOptions opt;
  opt.strategy = Strategy::kCompressCtrl;
  CHECK_THROWS_AS(generate_candidates(model, vocab, doc, opt), ConfigError);
  CHECK_THROWS_AS(parse_strategy("three2one"), ConfigError);
}

TEST_CASE("two-to-one uses the existing neighbour at document boundaries") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel& model = trained_model();
  Document doc;
  doc.id = "d";
  doc.sentences = {{"w1", "w2", "w3"}, {"w4", "w5"}, {"w6", "w7", "w8"}};
  CandidateOptions opt;
  opt.strategy = Strategy::kTwoToOne;
  const auto first = generate_candidate_set(model, vocab, doc, 0, opt);
  const Sentence joined{"w1", "w2", "w3", "w4", "w5"};
  const auto src = encode(joined, vocab);
  const auto expected =
      decode(diverse_beam_search(model, src, opt.beam).hypotheses[0].content(), vocab);
  CHECK(first[1] == expected);
  CHECK(first[2] == expected);

  Document single;
  single.id = "s";
  single.sentences = {{"w1", "w2"}};
  int warnings = 0;
  const auto alone = generate_candidate_set(model, vocab, single, 0, opt,
                                            [&](const std::string&) { ++warnings; });
  CHECK(alone.size() == 3);
  CHECK(warnings == 1);
}

TEST_CASE("worker count does not change candidate output") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const AbstractorModel& model = trained_model();
  Rng rng(15);
  std::vector<Document> docs(7);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    docs[i].id = std::to_string(i);
    for (int j = 0; j < 3; ++j) docs[i].sentences.push_back(synthetic::random_sentence(rng, kAlphabet, 3, 7));
  }
  CandidateOptions opt;
  opt.strategy = Strategy::kTopK;
  const auto one = generate_candidates(model, vocab, docs, opt, 1);
  const auto three = generate_candidates(model, vocab, docs, opt, 3);
  REQUIRE(one.size() == three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].id == three[i].id);
    CHECK(one[i].sets == three[i].sets);
  }
}
