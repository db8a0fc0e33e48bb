#include "condense/abstractor/model.hpp"
#include "condense/extractor/train.hpp"
#include "doctest.h"
#include "support/grad_suite.hpp"
#include "support/gradcheck.hpp"

using namespace condense;
using namespace condense::nn;

static_assert(sizeof(Real) == sizeof(double), "gradient checks need the double build");

TEST_CASE("every primitive matches central finite differences") {
  for (const auto& entry : testing::run_gradient_suite(20)) {
    INFO(entry.name << " worst: " << entry.worst);
    CHECK(entry.shapes >= 20);
    CHECK(entry.max_rel_error < 1e-4);
  }
}

TEST_CASE("linear loss gives the input as gradient") {
  ParameterStore store;
  Parameter& w = store.add("w", 3, 1);
  w.value = Tensor::column({0.5, -1.0, 2.0});
  Graph g;
  Var x = g.constant(Tensor::column({1.0, 2.0, 3.0}));
  g.backward(sum(mul(g.param(w), x)));
  CHECK(w.grad == Tensor::column({1.0, 2.0, 3.0}));
}

TEST_CASE("abstractor NLL gradients on a two-token target") {
  const Vocabulary vocab({"a", "b", "c"});
  AbstractorConfig c;
  c.vocab_size = vocab.size();
  c.emb_dim = 3;
  c.enc_hidden = 3;
  c.dec_hidden = 4;
  c.att_dim = 3;
  c.level_dim = 2;
  c.controllable = true;
  AbstractorModel model(c, 5);
  AbstractorPair pair;
  pair.source = {"a", "zebra", "b"};
  pair.target = {"zebra", "c"};
  pair.level = CompressionLevel::kLow;
  const AbstractorExample ex = make_example(pair, vocab, true);
  const auto result = testing::check_gradients(
      model.params(), [&](Graph& g) { return teacher_forced_loss(g, model, ex).loss; });
  INFO(result.worst);
  CHECK(result.entries == model.params().value_count());
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("pointer ML loss gradients on a three-candidate bank") {
  const Vocabulary vocab({"a", "b", "c", "d"});
  ExtractorConfig c;
  c.vocab_size = vocab.size();
  c.emb_dim = 3;
  c.windows = {1, 2};
  c.filters = 2;
  c.doc_hidden = 2;
  c.dec_hidden = 3;
  c.att_dim = 3;
  ExtractorModel model(c, 6);
  // CNN biases off zero keep the ReLUs away from their kink
  for (const auto& p : model.params().all()) {
    if (p->name.find(".cnn.") != std::string::npos && p->name.ends_with(".bias")) p->value.fill(0.5);
  }
  const ExtractorExample ex{{{{"a", "b"}, {"c"}, {"d", "a", "c"}}}, {2, 0}};
  const auto result = testing::check_gradients(
      model.params(), [&](Graph& g) { return pointer_ml_loss(g, model, ex, vocab).loss; });
  INFO(result.worst);
  CHECK(result.max_rel_error < 1e-4);
}
