#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "condense/nn/tensor.hpp"

namespace condense::inline CONDENSE_PRECISION::nn {

/// Trainable weight with a persistent name and a gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Owns a model's parameters. Addresses are stable for the store's lifetime.
class ParameterStore {
 public:
  /// Registers a zero-initialized parameter; duplicate names are rejected.
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  /// Registration order.
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  /// Sorted by name; the checkpoint order.
  std::vector<Parameter*> by_name() const;

  void zero_grad();
  std::size_t value_count() const;

  /// Copies values (not gradients) from a store with identical layout.
  void copy_values_from(const ParameterStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Graph;

/// kNone builds a forward-only tape: parameters are read but never
/// receive gradients, and no backward closures are kept.
enum class GradMode { kTrack, kNone };

/// Handle to a node of a Graph.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  Real scalar() const;
  /// Gradient after Graph::backward; empty for nodes that need none.
  const Tensor& grad() const;

 private:
  friend class Graph;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the tape is
/// a topological order and `backward` walks it in reverse.
class Graph {
 public:
  /// Receives the node's output value and the gradient flowing into it.
  using BackwardFn =
      std::function<void(Graph&, const Tensor& value, const Tensor& grad)>;

  explicit Graph(GradMode mode = GradMode::kTrack);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter: reads its value in place and accumulates
  /// into its gradient.
  Var param(Parameter& p);

  /// Appends an operation node. The node needs a gradient iff any parent
  /// does; `backward` is skipped otherwise.
  Var record(const char* op, Tensor value, std::initializer_list<Var> parents,
             BackwardFn backward);
  Var record(const char* op, Tensor value, const std::vector<Var>& parents,
             BackwardFn backward);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;

  /// Gradient buffer of `v` for use inside backward closures, or nullptr
  /// when `v` needs no gradient.
  Tensor* grad_buffer(Var v);

  /// Populates gradients of every node reachable from the 1x1 `loss`.
  /// Parameter gradients accumulate across calls; intermediate gradients are
  /// reset on each call.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  /// When on (the default), every recorded value is checked for NaN/Inf.
  void set_check_finite(bool on) { check_finite_ = on; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external_value = nullptr;
    Tensor grad;
    Tensor* external_grad = nullptr;
    BackwardFn backward;
    bool requires_grad = false;
    const char* op = "";
  };

  Var push(Node node);
  void check(Var v, const char* op) const;

  std::vector<Node> nodes_;
  bool check_finite_ = true;
  bool track_ = true;
};

}  // namespace condense::inline CONDENSE_PRECISION::nn
