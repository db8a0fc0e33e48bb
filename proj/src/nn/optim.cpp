#include "condense/nn/optim.hpp"

#include <cmath>

#include "condense/error.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

double global_grad_norm(const std::vector<Parameter*>& params) {
  double total = 0.0;
  for (const Parameter* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      const double g = p->grad[i];
      total += g * g;
    }
  }
  return std::sqrt(total);
}

double clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (norm <= max_norm) return 1.0;
  const double factor = max_norm / norm;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      p->grad[i] = static_cast<Real>(p->grad[i] * factor);
    }
  }
  return factor;
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::step() {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter '" + p.name + "'");
      }
      const double mi = b1 * m[i] + (1.0 - b1) * g;
      const double vi = b2 * v[i] + (1.0 - b2) * g * g;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      p.value[i] = static_cast<Real>(p.value[i] -
                                     config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps));
    }
    p.grad.fill(Real(0));
  }
}

std::vector<Parameter*> parameter_list(const ParameterStore& store) {
  std::vector<Parameter*> out;
  out.reserve(store.all().size());
  for (const auto& p : store.all()) out.push_back(p.get());
  return out;
}

}  // namespace condense::inline CONDENSE_PRECISION::nn
