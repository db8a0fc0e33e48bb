#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "condense/nn/graph.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

/// Scales every gradient by max_norm / g when the global L2 norm g exceeds
/// max_norm. Returns the factor applied (1 when untouched). Raises
/// NumericError on a non-finite norm.
double clip_global_norm(const std::vector<Parameter*>& params, double max_norm);

double global_grad_norm(const std::vector<Parameter*>& params);

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. `step` applies one
/// update and zeroes the gradients.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config);

  void step();
  std::int64_t steps() const { return t_; }
  const std::vector<Parameter*>& params() const { return params_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

  const Tensor& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor& second_moment(std::size_t i) const { return v_[i]; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

/// All parameters of a store in registration order.
std::vector<Parameter*> parameter_list(const ParameterStore& store);

}  // namespace condense::inline CONDENSE_PRECISION::nn
