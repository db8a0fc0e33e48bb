#pragma once

// Central finite-difference gradient check. Compile with CONDENSE_REAL_F64.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "condense/nn/graph.hpp"
#include "condense/nn/ops.hpp"
#include "condense/rng.hpp"

namespace condense::testing {

using nn::Graph;
using nn::Parameter;
using nn::ParameterStore;
using nn::Var;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // parameter[index] of the worst entry
  std::size_t entries = 0;
};

/// Compares analytic gradients with (L(x+h) - L(x-h)) / 2h for every entry
/// of every parameter. Relative error is |a - n| / max(|a|, |n|, floor); the
/// floor keeps entries whose true gradient is ~0 from dividing noise by
/// noise.
inline GradCheckResult check_gradients(ParameterStore& store,
                                       const std::function<Var(Graph&)>& loss_fn,
                                       double h = 1e-5, double floor = 1e-6) {
  store.zero_grad();
  {
    Graph g;
    Var loss = loss_fn(g);
    g.backward(loss);
  }
  auto evaluate = [&]() {
    Graph g;
    return static_cast<double>(loss_fn(g).scalar());
  };
  GradCheckResult result;
  for (const auto& p : store.all()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const auto saved = p->value[i];
      p->value[i] = saved + h;
      const double up = evaluate();
      p->value[i] = saved - h;
      const double down = evaluate();
      p->value[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.entries;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        char values[64];
        std::snprintf(values, sizeof values, " analytic=%.3e numeric=%.3e", analytic, numeric);
        result.worst = p->name + "[" + std::to_string(i) + "]" + values;
      }
    }
  }
  return result;
}

/// Fixed random projection to a scalar, so every output entry carries a
/// distinct gradient.
inline Var project(Graph& g, Var v, std::uint64_t seed) {
  Rng rng(seed);
  nn::Tensor w(v.rows(), v.cols());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
  return nn::sum(nn::mul(v, g.constant(std::move(w))));
}

}  // namespace condense::testing
