#include "condense/rl/a2c.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "condense/error.hpp"
#include "condense/nn/ops.hpp"
#include "condense/rouge.hpp"

namespace condense::inline CONDENSE_PRECISION {

using namespace nn;

std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw ConfigError("sampling from an empty distribution");
  const double u = rng.uniform();
  double acc = 0;
  std::size_t last = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  if (last == probs.size()) throw NumericError("sampling from an all-zero distribution");
  return last;  // rounding left u above the accumulated mass
}

Trajectory rollout(const ExtractorModel& policy, const std::vector<CandidateSet>& sets,
                   const Vocabulary& vocab, Rng& rng) {
  Graph g(GradMode::kNone);
  const MemoryBank bank = policy.encode_candidates(g, sets, vocab);
  Trajectory traj;
  std::vector<std::size_t> selected;
  LstmState state = policy.initial_state(g);
  Var input = policy.go(g);
  while (true) {
    const PointerStep step =
        policy.step(g, bank, state, input, selection_mask(bank, selected, policy.config()));
    const Tensor& d = step.dist.value();
    std::vector<double> probs(d.data(), d.data() + d.size());
    const std::size_t a = sample_index(probs, rng);
    traj.actions.push_back(a);
    traj.log_probs.push_back(std::log(probs[a]));
    if (a == bank.stop()) break;
    selected.push_back(a);
    if (selected.size() >= policy.config().max_steps) traj.truncated = true;
    state = step.state;
    input = row(bank.rows, a);
  }
  return traj;
}

std::vector<double> compute_rewards(const std::vector<Sentence>& selected,
                                    const ReferenceSummary& reference) {
  const std::size_t m = reference.sentences.size();
  std::vector<double> rewards;
  std::vector<Sentence> prefix;
  double previous = 0.0;
  for (std::size_t t = 0; t < selected.size(); ++t) {
    prefix.push_back(selected[t]);
    if (t < m) {
      const double current = rouge_l(prefix, reference.sentences).f1;
      rewards.push_back(current - previous);
      previous = current;
    } else {
      rewards.push_back(0.0);
    }
  }
  rewards.push_back(rouge_n(selected, reference.sentences, 1).f1);
  return rewards;
}

std::vector<double> compute_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> returns(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    returns[t] = running;
  }
  return returns;
}

std::vector<PointerStep> replay(Graph& g, const ExtractorModel& model, const MemoryBank& bank,
                                const std::vector<std::size_t>& actions) {
  std::vector<PointerStep> steps;
  std::vector<std::size_t> selected;
  LstmState state = model.initial_state(g);
  Var input = model.go(g);
  for (std::size_t a : actions) {
    if (a >= bank.size()) throw DataError("action " + std::to_string(a) + " outside the bank");
    steps.push_back(model.step(g, bank, state, input, selection_mask(bank, selected, model.config())));
    if (a == bank.stop()) break;
    selected.push_back(a);
    state = steps.back().state;
    input = row(bank.rows, a);
  }
  return steps;
}

Var policy_loss(const std::vector<Var>& log_probs, const std::vector<double>& advantages,
                double steps) {
  if (log_probs.size() != advantages.size() || log_probs.empty()) {
    throw ShapeError("policy loss needs one advantage per log-probability");
  }
  std::vector<Var> terms;
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    terms.push_back(scale(log_probs[t], static_cast<Real>(-advantages[t] / steps)));
  }
  return sum(concat(terms));
}

namespace {

std::string describe(const Trajectory& t) {
  std::ostringstream out;
  out << "actions [";
  for (std::size_t i = 0; i < t.actions.size(); ++i) out << (i ? " " : "") << t.actions[i];
  out << "] rewards [";
  for (std::size_t i = 0; i < t.rewards.size(); ++i) out << (i ? " " : "") << t.rewards[i];
  out << "] values [";
  for (std::size_t i = 0; i < t.values.size(); ++i) out << (i ? " " : "") << t.values[i];
  out << "]";
  return out.str();
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

void check_disjoint(const ParameterStore& a, const ParameterStore& b) {
  std::set<const Parameter*> seen;
  std::set<std::string> names;
  for (const auto& p : a.all()) {
    seen.insert(p.get());
    names.insert(p->name);
  }
  for (const auto& p : b.all()) {
    if (seen.count(p.get()) || names.count(p->name)) {
      throw ConfigError("policy and critic share parameter '" + p->name + "'");
    }
  }
}

}  // namespace

A2cTrainer::A2cTrainer(ExtractorModel& policy, ExtractorModel& critic, const Vocabulary& vocab,
                       const A2cConfig& config)
    : policy_(policy),
      critic_(critic),
      vocab_(vocab),
      config_(config),
      policy_opt_(parameter_list(policy.params()), AdamConfig{config.policy_lr}),
      critic_opt_(parameter_list(critic.params()), AdamConfig{config.critic_lr}) {
  if (!critic.config().value_head) throw ConfigError("critic needs a value head");
  check_disjoint(policy.params(), critic.params());
}

A2cLosses A2cTrainer::update(const std::vector<const RlDocument*>& docs,
                             std::vector<Trajectory>& batch) {
  if (docs.size() != batch.size() || batch.empty()) {
    throw ConfigError("A2C update needs one trajectory per document");
  }
  A2cLosses out;
  double steps = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Trajectory& t = batch[i];
    std::vector<std::size_t> selections(t.actions.begin(), t.actions.end() - 1);
    t.rewards = compute_rewards(realize(docs[i]->sets, selections), docs[i]->reference);
    if (t.rewards.size() != t.actions.size()) {
      throw DataError("trajectory does not end with the stop action: " + describe(t));
    }
    t.returns = compute_returns(t.rewards, config_.gamma);
    steps += double(t.actions.size());
    out.mean_reward += std::accumulate(t.rewards.begin(), t.rewards.end(), 0.0);
  }
  out.mean_reward /= double(batch.size());

  // critic pass: values, then the squared-error gradient
  policy_.params().zero_grad();
  critic_.params().zero_grad();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Trajectory& t = batch[i];
    Graph g;
    const MemoryBank bank = critic_.encode_candidates(g, docs[i]->sets, vocab_);
    if (t.actions.back() != bank.stop() ||
        std::find(t.actions.begin(), t.actions.end() - 1, bank.stop()) != t.actions.end() - 1) {
      throw DataError("trajectory must end with its only stop action: " + describe(t));
    }
    const auto trace = replay(g, critic_, bank, t.actions);
    std::vector<Var> errors;
    t.values.clear();
    for (std::size_t s = 0; s < trace.size(); ++s) {
      const Var v = critic_.value(g, trace[s].glimpse);
      t.values.push_back(v.scalar());
      const Var err = affine(v, Real(1), static_cast<Real>(-t.returns[s]));
      errors.push_back(mul(err, err));
    }
    const Var loss = scale(sum(concat(errors)), static_cast<Real>(1.0 / steps));
    out.critic_loss += loss.scalar();
    if (!std::isfinite(out.critic_loss)) throw NumericError("critic loss is not finite: " + describe(t));
    g.backward(loss);
  }

  std::vector<std::vector<double>> advantages(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t s = 0; s < batch[i].returns.size(); ++s) {
      advantages[i].push_back(batch[i].returns[s] - batch[i].values[s]);
    }
  }
  if (config_.whiten_advantages) {
    double mean = 0, sq = 0;
    for (const auto& a : advantages) mean += std::accumulate(a.begin(), a.end(), 0.0);
    mean /= steps;
    for (const auto& a : advantages) {
      for (double x : a) sq += (x - mean) * (x - mean);
    }
    const double sd = std::sqrt(sq / steps) + 1e-8;
    for (auto& a : advantages) {
      for (double& x : a) x = (x - mean) / sd;
    }
  }

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Trajectory& t = batch[i];
    Graph g;
    const MemoryBank bank = policy_.encode_candidates(g, docs[i]->sets, vocab_);
    const auto trace = replay(g, policy_, bank, t.actions);
    std::vector<Var> log_probs;
    for (std::size_t s = 0; s < trace.size(); ++s) {
      log_probs.push_back(log(pick(trace[s].dist, t.actions[s])));
    }
    const Var loss = policy_loss(log_probs, advantages[i], steps);
    out.policy_loss += loss.scalar();
    if (!std::isfinite(out.policy_loss)) throw NumericError("policy loss is not finite: " + describe(t));
    g.backward(loss);
  }

  try {
    clip_global_norm(policy_opt_.params(), config_.clip);
    clip_global_norm(critic_opt_.params(), config_.clip);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + "; first trajectory: " + describe(batch.front()));
  }
  policy_opt_.step();
  critic_opt_.step();
  return out;
}

A2cLosses A2cTrainer::step(const std::vector<const RlDocument*>& docs, Rng& rng) {
  std::vector<Trajectory> batch;
  batch.reserve(docs.size());
  for (const RlDocument* d : docs) batch.push_back(rollout(policy_, d->sets, vocab_, rng));
  return update(docs, batch);
}

double validation_rouge_l(const ExtractorModel& policy, const std::vector<RlDocument>& docs,
                          const Vocabulary& vocab) {
  if (docs.empty()) return 0.0;
  double total = 0;
  for (const auto& d : docs) {
    const SummaryHypothesis h = extract_greedy(policy, d.sets, vocab);
    total += rouge_l(h.sentences, d.reference.sentences).f1;
  }
  return total / double(docs.size());
}

RlTrainLog train_rl(ExtractorModel& policy, ExtractorModel& critic, const Vocabulary& vocab,
                    const std::vector<RlDocument>& train, const std::vector<RlDocument>& valid,
                    const A2cConfig& config, const std::function<void(const RlEpoch&)>& on_epoch) {
  if (train.empty()) throw ConfigError("RL training needs at least one document");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  A2cTrainer trainer(policy, critic, vocab, config);
  Rng rng(config.seed);
  Rng shuffle = rng.split(1);
  Rng sampler = rng.split(2);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  RlTrainLog log;
  ParameterStore best_values;
  for (const auto& p : policy.params().all()) best_values.add(p->name, p->value.rows(), p->value.cols());
  best_values.copy_values_from(policy.params());

  RlEpoch start;
  start.val_rouge_l = validation_rouge_l(policy, valid, vocab);
  log.epochs.push_back(start);
  if (on_epoch) on_epoch(start);
  double best = start.val_rouge_l;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    RlEpoch e;
    e.epoch = epoch;
    std::size_t updates = 0;
    for (std::size_t s = 0; s < order.size(); s += config.batch_size) {
      std::vector<const RlDocument*> docs;
      for (std::size_t i = s; i < std::min(order.size(), s + config.batch_size); ++i) {
        docs.push_back(&train[order[i]]);
      }
      std::vector<Trajectory> batch;
      for (const RlDocument* d : docs) batch.push_back(rollout(policy, d->sets, vocab, sampler));
      const A2cLosses l = trainer.update(docs, batch);
      for (const Trajectory& t : batch) {
        log.episode_rewards.push_back(std::accumulate(t.rewards.begin(), t.rewards.end(), 0.0));
      }
      e.mean_reward += l.mean_reward;
      e.policy_loss += l.policy_loss;
      e.critic_loss += l.critic_loss;
      ++updates;
    }
    e.mean_reward /= double(updates);
    e.policy_loss /= double(updates);
    e.critic_loss /= double(updates);
    e.val_rouge_l = validation_rouge_l(policy, valid, vocab);
    log.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
    if (e.val_rouge_l > best) {
      best = e.val_rouge_l;
      log.best_epoch = epoch;
      best_values.copy_values_from(policy.params());
      if (!config.checkpoint_path.empty()) {
        policy.save(config.checkpoint_path, {{"epoch", epoch}, {"val_rouge_l", best}});
      }
    }
  }
  policy.params().copy_values_from(best_values);
  return log;
}

void write_rl_log(const std::string& path, const RlTrainLog& log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "epoch,mean_reward,policy_loss,critic_loss,val_rouge_l\n";
  out << std::setprecision(10);
  for (const RlEpoch& e : log.epochs) {
    out << e.epoch << ',' << e.mean_reward << ',' << e.policy_loss << ',' << e.critic_loss << ','
        << e.val_rouge_l << '\n';
  }
}

}  // namespace condense::inline CONDENSE_PRECISION
