#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "thermocae/tensor.hpp"

namespace thermocae {

/// A trainable tensor. `grad` is overwritten by every Graph::backward.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Define-by-run tape. Nodes are appended in evaluation order, so a node's
/// inputs always precede it and a reverse sweep is a valid topological order.
/// Build a fresh graph per forward pass.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to `p`; repeated calls for the same parameter share one node.
  Var parameter(Parameter& p);
  /// Appends an op node. `fn` is dropped when no input needs a gradient.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);

  /// Reverse sweep from a scalar node. Parameter grads are overwritten.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Gradient of the last backward pass; empty when the node was not reached.
  const Tensor& grad(std::size_t id) const { return nodes_.at(id).grad; }
  /// Gradient accumulator for `id`, zero-initialised on first use.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Var push(Node node);

  // A deque so that references returned by value() survive later pushes.
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

}  // namespace thermocae
