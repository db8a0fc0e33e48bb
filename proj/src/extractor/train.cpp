#include "condense/extractor/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "condense/error.hpp"
#include "condense/nn/ops.hpp"
#include "condense/nn/optim.hpp"

namespace condense::inline CONDENSE_PRECISION {

using namespace nn;

std::vector<std::size_t> supervised_labels(const std::vector<std::size_t>& labels,
                                           const ExtractorConfig& config) {
  std::vector<std::size_t> out;
  for (std::size_t l : labels) {
    if (config.mask_repeats && std::find(out.begin(), out.end(), l) != out.end()) continue;
    if (out.size() == config.max_steps) break;
    out.push_back(l);
  }
  return out;
}

PointerLoss pointer_ml_loss(Graph& g, const ExtractorModel& model, const ExtractorExample& example,
                            const Vocabulary& vocab) {
  const MemoryBank bank = model.encode_candidates(g, example.sets, vocab);
  for (std::size_t l : example.labels) {
    if (l >= bank.candidates) {
      throw DataError("extraction label " + std::to_string(l) + " outside a proxy document of " +
                      std::to_string(bank.candidates));
    }
  }
  std::vector<std::size_t> targets = supervised_labels(example.labels, model.config());
  targets.push_back(bank.stop());

  PointerLoss out;
  std::vector<Var> terms;
  std::vector<std::size_t> selected;
  LstmState state = model.initial_state(g);
  Var input = model.go(g);
  for (std::size_t target : targets) {
    const PointerStep step =
        model.step(g, bank, state, input, selection_mask(bank, selected, model.config()));
    const Tensor& d = step.dist.value();
    const auto best = static_cast<std::size_t>(std::max_element(d.data(), d.data() + d.size()) - d.data());
    if (best == target) ++out.correct;
    ++out.steps;
    terms.push_back(log(pick(step.dist, target)));
    if (target == bank.stop()) break;
    selected.push_back(target);
    state = step.state;
    input = row(bank.rows, target);
  }
  out.loss = scale(sum(concat(terms)), Real(-1));
  return out;
}

ExtractorEpoch evaluate_extractor(const ExtractorModel& model,
                                  const std::vector<ExtractorExample>& examples,
                                  const Vocabulary& vocab) {
  double nll = 0;
  std::size_t steps = 0, correct = 0;
  for (const auto& ex : examples) {
    Graph g(GradMode::kNone);
    const PointerLoss l = pointer_ml_loss(g, model, ex, vocab);
    nll += l.loss.scalar();
    steps += l.steps;
    correct += l.correct;
  }
  ExtractorEpoch e;
  e.train_nll = e.valid_nll = steps ? nll / double(steps) : 0.0;
  e.accuracy = e.valid_accuracy = steps ? double(correct) / double(steps) : 0.0;
  return e;
}

ExtractorTrainLog pretrain_extractor(ExtractorModel& model, const Vocabulary& vocab,
                                     const std::vector<ExtractorExample>& train,
                                     const std::vector<ExtractorExample>& valid,
                                     const MlTrainConfig& config,
                                     const std::function<void(const ExtractorEpoch&)>& on_epoch) {
  if (train.empty()) throw ConfigError("extractor pre-training needs at least one document");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  ParameterStore& store = model.params();
  Adam adam(parameter_list(store), AdamConfig{config.lr});
  Rng rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  ParameterStore best_values;
  for (const auto& p : store.all()) best_values.add(p->name, p->value.rows(), p->value.cols());
  double best = std::numeric_limits<double>::infinity();
  ExtractorTrainLog log;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    double nll = 0;
    std::size_t steps = 0, correct = 0;
    store.zero_grad();
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t batch_steps = 0;
      for (std::size_t i = start; i < end; ++i) {
        batch_steps += supervised_labels(train[order[i]].labels, model.config()).size() + 1;
      }
      for (std::size_t i = start; i < end; ++i) {
        Graph g;
        const PointerLoss l = pointer_ml_loss(g, model, train[order[i]], vocab);
        nll += l.loss.scalar();
        steps += l.steps;
        correct += l.correct;
        g.backward(scale(l.loss, Real(1) / static_cast<Real>(batch_steps)));
      }
      clip_global_norm(adam.params(), config.clip);
      adam.step();
    }
    ExtractorEpoch e;
    e.epoch = epoch;
    e.train_nll = nll / double(steps);
    e.accuracy = double(correct) / double(steps);
    if (valid.empty()) {
      e.valid_nll = e.valid_accuracy = std::numeric_limits<double>::quiet_NaN();
    } else {
      const ExtractorEpoch v = evaluate_extractor(model, valid, vocab);
      e.valid_nll = v.train_nll;
      e.valid_accuracy = v.accuracy;
    }
    log.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
    const double score = valid.empty() ? e.train_nll : e.valid_nll;
    if (score < best) {
      best = score;
      log.best_epoch = epoch;
      best_values.copy_values_from(store);
      if (!config.checkpoint_path.empty()) {
        model.save(config.checkpoint_path, {{"epoch", epoch}, {"score", score}});
      }
    }
  }
  store.copy_values_from(best_values);
  return log;
}

}  // namespace condense::inline CONDENSE_PRECISION
