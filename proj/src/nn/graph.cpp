#include "condense/nn/graph.hpp"

#include <algorithm>
#include <cmath>

#include "condense/error.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](Real x) { return std::isfinite(x); });
}

Parameter& ParameterStore::add(const std::string& name, std::size_t rows,
                               std::size_t cols) {
  if (contains(name)) throw ConfigError("parameter '" + name + "' registered twice");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(rows, cols);
  p->grad = Tensor(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ConfigError("no parameter named '" + name + "'");
}

const Parameter& ParameterStore::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ConfigError("no parameter named '" + name + "'");
}

bool ParameterStore::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const auto& p) { return p->name == name; });
}

std::vector<Parameter*> ParameterStore::by_name() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  std::sort(out.begin(), out.end(),
            [](const Parameter* a, const Parameter* b) { return a->name < b->name; });
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(Real(0));
}

std::size_t ParameterStore::value_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.params_.size() != params_.size()) {
    throw ConfigError("parameter stores differ in layout");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = *other.params_[i];
    auto& dst = *params_[i];
    if (src.name != dst.name || !src.value.same_shape(dst.value)) {
      throw ConfigError("parameter stores differ at '" + dst.name + "'");
    }
    dst.value = src.value;
  }
}

const Tensor& Var::value() const { return graph_->value(*this); }

Real Var::scalar() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ShapeError("scalar() on a " + v.shape_string() + " value");
  return v[0];
}

const Tensor& Var::grad() const { return graph_->grad(*this); }

Graph::Graph(GradMode mode) : track_(mode == GradMode::kTrack) { nodes_.reserve(256); }

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.op = "constant";
  Var v = push(std::move(node));
  check(v, "constant");
  return v;
}

Var Graph::param(Parameter& p) {
  Node node;
  node.external_value = &p.value;
  node.external_grad = track_ ? &p.grad : nullptr;
  node.requires_grad = track_;
  node.op = "param";
  return push(std::move(node));
}

Var Graph::record(const char* op, Tensor value, std::initializer_list<Var> parents,
                  BackwardFn backward) {
  return record(op, std::move(value), std::vector<Var>(parents), std::move(backward));
}

Var Graph::record(const char* op, Tensor value, const std::vector<Var>& parents,
                  BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.op = op;
  for (const Var& p : parents) {
    if (p.graph_ != this) throw ConfigError(std::string(op) + ": operand from another graph");
    if (nodes_[p.id_].requires_grad) node.requires_grad = true;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  Var v = push(std::move(node));
  check(v, op);
  return v;
}

void Graph::check(Var v, const char* op) const {
  if (check_finite_ && !value(v).all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_[v.id_];
  return n.external_value ? *n.external_value : n.value;
}

const Tensor& Graph::grad(Var v) const {
  const Node& n = nodes_[v.id_];
  return n.external_grad ? *n.external_grad : n.grad;
}

bool Graph::requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }

Tensor* Graph::grad_buffer(Var v) {
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return nullptr;
  return n.external_grad ? n.external_grad : &n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph_ != this) throw ConfigError("backward: loss from another graph");
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw ConfigError("backward needs a scalar loss, got " + lv.shape_string());
  }
  for (std::size_t i = 0; i <= loss.id_; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad && !n.external_grad) {
      const Tensor& val = n.external_value ? *n.external_value : n.value;
      n.grad.reshape_zero(val.rows(), val.cols());
    }
  }
  if (!nodes_[loss.id_].requires_grad) return;
  (*grad_buffer(loss))[0] += Real(1);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    n.backward(*this, n.value, n.grad);
  }
}

}  // namespace condense::inline CONDENSE_PRECISION::nn
