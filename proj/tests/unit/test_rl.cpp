#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "condense/error.hpp"
#include "condense/nn/ops.hpp"
#include "condense/rl/a2c.hpp"
#include "condense/rouge.hpp"
#include "doctest.h"
#include "support/synthetic.hpp"

using namespace condense;
using namespace condense::nn;

namespace {

constexpr std::size_t kAlphabet = 12;

ExtractorConfig small_config(const Vocabulary& vocab, bool critic = false) {
  ExtractorConfig c;
  c.vocab_size = vocab.size();
  c.emb_dim = 6;
  c.windows = {1, 2};
  c.filters = 4;
  c.doc_hidden = 5;
  c.dec_hidden = 7;
  c.att_dim = 6;
  c.value_head = critic;
  return c;
}

std::vector<Sentence> realize(const std::vector<CandidateSet>& sets,
                              const std::vector<std::size_t>& actions) {
  const ProxyDocument proxy = make_proxy(sets);
  std::vector<Sentence> out;
  for (std::size_t a : actions) {
    if (a < proxy.size()) out.push_back(proxy.candidates[a]);
  }
  return out;
}

// one set: candidate 0 is the reference, candidate 1 shares nothing with it
RlDocument bandit() {
  RlDocument d;
  d.sets = {{{"w1", "w2", "w3"}, {"w7", "w8", "w9"}}};
  d.reference.sentences = {{"w1", "w2", "w3"}};
  return d;
}

std::vector<double> values_of(const ParameterStore& s) {
  std::vector<double> out;
  for (const auto& p : s.all()) out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

}  // namespace

TEST_CASE("reward examples") {
  ReferenceSummary ref;
  ref.sentences = {{"a", "b"}};
  const auto r = compute_rewards({{"a", "b"}, {"c"}}, ref);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 0.0);  // beyond the reference length
  CHECK(r[2] == doctest::Approx(0.8).epsilon(1e-12));

  const auto empty = compute_rewards({}, ref);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0] == 0.0);
}

TEST_CASE("discounted returns") {
  const auto R = compute_returns({1.0, 0.0, 0.8}, 0.5);
  REQUIRE(R.size() == 3);
  CHECK(R[2] == doctest::Approx(0.8));
  CHECK(R[1] == doctest::Approx(0.4));
  CHECK(R[0] == doctest::Approx(1.2));
  CHECK(compute_returns({}, 0.9).empty());
  const auto two = compute_returns({1.0, 1.0}, 0.95);
  CHECK(two[0] == doctest::Approx(1.95).epsilon(1e-12));
  CHECK(two[1] == 1.0);
  CHECK(compute_returns({0.0, 0.0, 0.0}, 0.95) == std::vector<double>{0.0, 0.0, 0.0});
  // recursion holds to 1e-12 on random rewards
  Rng rng(2);
  std::vector<double> r(20);
  for (double& v : r) v = rng.uniform(-1, 1);
  const auto ret = compute_returns(r, 0.95);
  for (std::size_t t = 0; t + 1 < r.size(); ++t) CHECK(std::abs(ret[t] - (r[t] + 0.95 * ret[t + 1])) < 1e-12);
}

TEST_CASE("a fixed seed reproduces the trajectory") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  const ExtractorModel policy(small_config(vocab), 3);
  const RlDocument d = bandit();
  Rng a(77), b(77);
  for (int i = 0; i < 20; ++i) {
    const Trajectory x = rollout(policy, d.sets, vocab, a);
    const Trajectory y = rollout(policy, d.sets, vocab, b);
    CHECK(x.actions == y.actions);
    CHECK(x.log_probs == y.log_probs);
  }
}

TEST_CASE("marginal rewards telescope to the prefix score") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    ReferenceSummary ref;
    const std::size_t m = 1 + rng.below(3);
    for (std::size_t i = 0; i < m; ++i) ref.sentences.push_back(synthetic::random_sentence(rng, 6, 1, 5));
    std::vector<Sentence> sel;
    const std::size_t T = rng.below(5);
    for (std::size_t i = 0; i < T; ++i) sel.push_back(synthetic::random_sentence(rng, 6, 1, 5));
    const auto r = compute_rewards(sel, ref);
    REQUIRE(r.size() == T + 1);
    const std::size_t upto = std::min(m, T);
    const double telescoped = std::accumulate(r.begin(), r.begin() + static_cast<long>(upto), 0.0);
    const std::vector<Sentence> prefix(sel.begin(), sel.begin() + static_cast<long>(upto));
    CHECK(telescoped == doctest::Approx(rouge_l(prefix, ref.sentences).f1).epsilon(1e-12));
    CHECK(r.back() == rouge_n(sel, ref.sentences, 1).f1);
  }
}

TEST_CASE("categorical sampling frequencies stay within three standard deviations") {
  const std::vector<double> p{0.1, 0.2, 0.7, 0.0};
  Rng rng(5);
  const int draws = 100000;
  std::vector<int> counts(p.size(), 0);
  for (int i = 0; i < draws; ++i) ++counts[sample_index(p, rng)];
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double sd = std::sqrt(draws * p[i] * (1 - p[i]));
    CHECK(std::abs(counts[i] - draws * p[i]) <= 3 * sd);
  }
  CHECK(counts[3] == 0);
  CHECK_THROWS_AS(sample_index(std::vector<double>{0.0, 0.0}, rng), NumericError);
}

TEST_CASE("rollouts end with stop and force it after max_steps") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  ExtractorConfig c = small_config(vocab);
  c.max_steps = 1;
  const ExtractorModel policy(c, 1);
  const RlDocument d = bandit();
  Rng rng(9);
  int truncated = 0;
  for (int i = 0; i < 200; ++i) {
    const Trajectory t = rollout(policy, d.sets, vocab, rng);
    REQUIRE(!t.actions.empty());
    CHECK(t.actions.back() == 2);
    CHECK(t.actions.size() <= 2);
    CHECK(t.log_probs.size() == t.actions.size());
    if (t.truncated) {
      ++truncated;
      CHECK(t.log_probs.back() == 0.0);
    }
  }
  CHECK(truncated > 0);
}

TEST_CASE("policy and critic must not share parameters") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  ExtractorModel policy(small_config(vocab), 1);
  ExtractorModel critic(small_config(vocab, true), 2, "critic");
  ExtractorModel same_names(small_config(vocab, true), 2);
  ExtractorModel no_head(small_config(vocab), 2, "critic");
  const A2cConfig cfg;
  CHECK_NOTHROW(A2cTrainer(policy, critic, vocab, cfg));
  CHECK_THROWS_AS(A2cTrainer(policy, same_names, vocab, cfg), ConfigError);
  CHECK_THROWS_AS(A2cTrainer(policy, no_head, vocab, cfg), ConfigError);
  for (const auto& p : critic.params().all()) CHECK_FALSE(policy.params().contains(p->name));
}

TEST_CASE("zero rewards leave both networks unchanged") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  ExtractorModel policy(small_config(vocab), 1);
  ExtractorModel critic(small_config(vocab, true), 2, "critic");
  RlDocument d = bandit();
  d.reference.sentences = {{"w11"}};  // disjoint from every candidate
  const auto before_p = values_of(policy.params());
  const auto before_c = values_of(critic.params());
  A2cTrainer trainer(policy, critic, vocab, A2cConfig{});
  Rng rng(4);
  for (int i = 0; i < 3; ++i) {
    const A2cLosses l = trainer.step({&d, &d, &d, &d}, rng);
    CHECK(l.mean_reward == 0.0);
    CHECK(l.critic_loss == 0.0);
  }
  CHECK(values_of(policy.params()) == before_p);
  CHECK(values_of(critic.params()) == before_c);
}

TEST_CASE("update fills rewards, returns and critic values") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  ExtractorModel policy(small_config(vocab), 1);
  ExtractorModel critic(small_config(vocab, true), 2, "critic");
  const RlDocument d = bandit();
  A2cConfig cfg;
  cfg.gamma = 0.5;
  A2cTrainer trainer(policy, critic, vocab, cfg);
  std::vector<Trajectory> batch(1);
  batch[0].actions = {0, 2};
  trainer.update({&d}, batch);
  CHECK(batch[0].rewards == std::vector<double>{1.0, 1.0});
  CHECK(batch[0].returns == std::vector<double>{1.5, 1.0});
  CHECK(batch[0].values == std::vector<double>{0.0, 0.0});  // zero-initialized head

  std::vector<Trajectory> bad(1);
  bad[0].actions = {0, 1};  // no stop
  CHECK_THROWS(trainer.update({&d}, bad));
}

TEST_CASE("A2C learns a two-armed bandit") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  ExtractorConfig c = small_config(vocab);
  c.max_steps = 1;
  ExtractorModel policy(c, 21);
  ExtractorConfig cc = c;
  cc.value_head = true;
  ExtractorModel critic(cc, 22, "critic");
  const RlDocument d = bandit();
  auto prob_good = [&] {
    Graph g(GradMode::kNone);
    const MemoryBank bank = policy.encode_candidates(g, d.sets, vocab);
    return double(policy.step(g, bank, policy.initial_state(g), policy.go(g),
                              selection_mask(bank, {}, c)).dist.value()[0]);
  };
  const double before = prob_good();
  A2cConfig cfg;
  cfg.policy_lr = 1e-2;
  cfg.critic_lr = 1e-2;
  A2cTrainer trainer(policy, critic, vocab, cfg);
  Rng rng(6);
  std::vector<const RlDocument*> batch(16, &d);
  std::vector<double> rewards;
  for (int i = 0; i < 60; ++i) rewards.push_back(trainer.step(batch, rng).mean_reward);
  const double after = prob_good();
  MESSAGE("p(good) " << before << " -> " << after << ", reward " << rewards.front() << " -> "
                     << rewards.back());
  CHECK(after > 0.9);
  CHECK(after > before);
  CHECK(extract_greedy(policy, d.sets, vocab).slots == std::vector<std::size_t>{0});
  CHECK(rewards.back() > rewards.front());
}

TEST_CASE("train_rl logs a pre-RL row and writes the CSV") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  ExtractorModel policy(small_config(vocab), 1);
  ExtractorModel critic(small_config(vocab, true), 2, "critic");
  const std::vector<RlDocument> docs{bandit(), bandit()};
  A2cConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  const RlTrainLog log = train_rl(policy, critic, vocab, docs, docs, cfg);
  REQUIRE(log.epochs.size() == 3);
  CHECK(log.epochs[0].epoch == 0);
  CHECK(log.episode_rewards.size() == 4);
  CHECK_THROWS_AS(train_rl(policy, critic, vocab, {}, docs, cfg), ConfigError);

  const std::string path = "test_rl_log.csv";
  write_rl_log(path, log);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,mean_reward,policy_loss,critic_loss,val_rouge_l");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 3);
  in.close();
  std::remove(path.c_str());
}

namespace {

struct Outcome {
  std::vector<std::size_t> actions;
  double prob = 1.0;
};

void enumerate(const ExtractorModel& m, Graph& g, const MemoryBank& bank, LstmState state, Var input,
               std::vector<std::size_t> prefix, double prob, std::vector<Outcome>& out) {
  std::vector<std::size_t> selected(prefix.begin(), prefix.end());
  const PointerStep step = m.step(g, bank, state, input, selection_mask(bank, selected, m.config()));
  const Tensor& d = step.dist.value();
  for (std::size_t a = 0; a < bank.size(); ++a) {
    if (d[a] == 0.0) continue;
    auto next = prefix;
    next.push_back(a);
    if (a == bank.stop()) {
      out.push_back({next, prob * d[a]});
    } else {
      enumerate(m, g, bank, step.state, row(bank.rows, a), next, prob * d[a], out);
    }
  }
}

double total_reward(const RlDocument& d, const std::vector<std::size_t>& actions) {
  const std::vector<std::size_t> sel(actions.begin(), actions.end() - 1);
  const auto r = compute_rewards(realize(d.sets, sel), d.reference);
  return std::accumulate(r.begin(), r.end(), 0.0);
}

double expected_reward(const ExtractorModel& m, const RlDocument& d, const Vocabulary& vocab) {
  Graph g(GradMode::kNone);
  const MemoryBank bank = m.encode_candidates(g, d.sets, vocab);
  std::vector<Outcome> outcomes;
  enumerate(m, g, bank, m.initial_state(g), m.go(g), {}, 1.0, outcomes);
  double j = 0;
  for (const auto& o : outcomes) j += o.prob * total_reward(d, o.actions);
  return j;
}

}  // namespace

TEST_CASE("policy-gradient estimator agrees with finite differences of the expected reward") {
  const Vocabulary vocab = synthetic::toy_vocab(kAlphabet);
  ExtractorConfig c = small_config(vocab);
  c.max_steps = 2;
  ExtractorModel policy(c, 31);
  RlDocument d = bandit();
  d.reference.sentences = {{"w1", "w2", "w3"}, {"w8"}};

  Parameter& theta = policy.params().get("ext.pointer_v");
  const std::size_t idx = 0;
  const double h = 1e-5;
  const double saved = theta.value[idx];
  theta.value[idx] = saved + h;
  const double up = expected_reward(policy, d, vocab);
  theta.value[idx] = saved - h;
  const double down = expected_reward(policy, d, vocab);
  theta.value[idx] = saved;
  const double fd = (up - down) / (2 * h);

  // gamma = 1, zero baseline: gradient of the A2C policy loss per distinct trajectory
  const int samples = 100000;
  Rng rng(17);
  std::map<std::vector<std::size_t>, int> counts;
  for (int i = 0; i < samples; ++i) ++counts[rollout(policy, d.sets, vocab, rng).actions];
  double estimate = 0;
  for (const auto& [actions, n] : counts) {
    const std::vector<std::size_t> sel(actions.begin(), actions.end() - 1);
    const auto returns = compute_returns(compute_rewards(realize(d.sets, sel), d.reference), 1.0);
    policy.params().zero_grad();
    Graph g;
    const MemoryBank bank = policy.encode_candidates(g, d.sets, vocab);
    const auto trace = replay(g, policy, bank, actions);
    std::vector<Var> log_probs;
    for (std::size_t t = 0; t < trace.size(); ++t) log_probs.push_back(log(pick(trace[t].dist, actions[t])));
    g.backward(policy_loss(log_probs, returns, 1.0));
    estimate -= double(n) / samples * theta.grad[idx];
  }
  MESSAGE("finite difference " << fd << ", score-function estimate " << estimate << " over "
                               << counts.size() << " trajectories");
  REQUIRE(std::abs(fd) > 1e-3);
  CHECK(std::abs(estimate - fd) <= 0.05 * std::abs(fd));
}
