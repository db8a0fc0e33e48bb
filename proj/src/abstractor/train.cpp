#include "condense/abstractor/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "condense/error.hpp"
#include "condense/nn/optim.hpp"

namespace condense::inline CONDENSE_PRECISION {

using namespace nn;

AbstractorEpoch evaluate_abstractor(const AbstractorModel& model,
                                    const std::vector<AbstractorExample>& examples) {
  AbstractorEpoch out;
  double nll = 0;
  std::size_t tokens = 0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    Graph g(GradMode::kNone);
    const ExampleLoss l = teacher_forced_loss(g, model, ex);
    nll += l.loss.scalar();
    tokens += l.tokens;
    correct += l.correct;
  }
  out.train_nll = tokens ? nll / double(tokens) : 0.0;
  out.valid_nll = out.train_nll;
  out.token_accuracy = tokens ? double(correct) / double(tokens) : 0.0;
  return out;
}

AbstractorTrainLog train_abstractor(AbstractorModel& model,
                                    const std::vector<AbstractorExample>& train,
                                    const std::vector<AbstractorExample>& valid,
                                    const MlTrainConfig& config,
                                    const std::function<void(const AbstractorEpoch&)>& on_epoch) {
  if (train.empty()) throw ConfigError("abstractor training needs at least one pair");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  ParameterStore& store = model.params();
  Adam adam(parameter_list(store), AdamConfig{config.lr});
  Rng rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  AbstractorTrainLog log;
  double best = std::numeric_limits<double>::infinity();
  ParameterStore best_values;
  for (const auto& p : store.all()) best_values.add(p->name, p->value.rows(), p->value.cols());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    double nll = 0;
    std::size_t tokens = 0;
    std::size_t correct = 0;
    store.zero_grad();
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < end; ++i) batch_tokens += train[order[i]].target.size();
      for (std::size_t i = start; i < end; ++i) {
        Graph g;
        const ExampleLoss l = teacher_forced_loss(g, model, train[order[i]]);
        nll += l.loss.scalar();
        tokens += l.tokens;
        correct += l.correct;
        g.backward(scale(l.loss, Real(1) / static_cast<Real>(batch_tokens)));
      }
      clip_global_norm(adam.params(), config.clip);
      adam.step();
    }
    AbstractorEpoch e;
    e.epoch = epoch;
    e.train_nll = nll / double(tokens);
    e.token_accuracy = double(correct) / double(tokens);
    e.valid_nll = valid.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : evaluate_abstractor(model, valid).train_nll;
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
