// SPDX-License-Identifier: Apache-2.0
/**
 * @file   graph.hpp
 * @brief  Define-then-run differentiation graph.
 *
 * Nodes are appended in construction order, so node ids are already a
 * topological order. Shapes are inferred while building; values are
 * computed by `forward_eval` and cached for `backward`.
 *
 * Parameters are read from the ParamStore passed at construction at every
 * forward pass, so one graph can be re-evaluated after the store changes.
 */
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "numcore/params.hpp"
#include "numcore/tensor.hpp"

namespace gremetl::num {

using NodeId = std::size_t;
using Inputs = std::map<std::string, Tensor, std::less<>>;

enum class OpKind {
  Input,
  Constant,
  Parameter,
  MatMul,
  Add,
  Mul,
  Concat,
  Slice,
  Sigmoid,
  Tanh,
  Softmax,
  LogSoftmax,
  Log,
  Mean,
  Sum,
  StopGradient,
  Custom,
};

const char *op_name(OpKind kind);

/// User-defined op. `backward` returns one gradient per input, each shaped
/// like that input.
struct CustomOp {
  std::string name;
  std::function<Shape(const std::vector<Shape> &)> infer_shape;
  std::function<Tensor(const std::vector<const Tensor *> &)> forward;
  std::function<std::vector<Tensor>(const std::vector<const Tensor *> &inputs,
                                    const Tensor &output,
                                    const Tensor &grad_output)>
    backward;
};

class Graph {
 public:
  explicit Graph(const ParamStore &store) : store_(&store) {}

  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;
  Graph(Graph &&) = default;
  Graph &operator=(Graph &&) = default;

  // Leaves.
  NodeId input(std::string name, Shape shape);
  NodeId constant(Tensor value, std::string label = {});
  NodeId param(ParamId id);

  // Ops. Binary elementwise ops require identical shapes.
  NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId concat(const std::vector<NodeId> &parts, std::size_t axis);
  NodeId slice(NodeId x, std::size_t axis, std::size_t begin, std::size_t end);
  NodeId sigmoid(NodeId x);
  NodeId tanh(NodeId x);
  /// Softmax along the last axis (per row for matrices).
  NodeId softmax(NodeId x);
  NodeId log_softmax(NodeId x);
  NodeId log(NodeId x);
  NodeId mean(NodeId x);
  NodeId sum(NodeId x);
  NodeId stop_gradient(NodeId x);
  NodeId custom(const CustomOp &op, const std::vector<NodeId> &inputs);

  // Composites built from the ops above.
  NodeId scale(NodeId x, double factor);
  NodeId sub(NodeId a, NodeId b);
  /// 1 - x
  NodeId one_minus(NodeId x);
  /// Broadcast a [1, n] row to [rows, n] via a ones column matmul.
  NodeId repeat_rows(NodeId row, std::size_t rows);

  void set_label(NodeId id, std::string label);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Shape &shape(NodeId id) const { return nodes_.at(id).shape; }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  std::string describe(NodeId id) const;

  /// Evaluate every node up to and including `output`.
  /// Throws ShapeError if an input is missing or misshapen and NumericError
  /// if any node produces a non-finite value.
  const Tensor &forward_eval(const Inputs &inputs, NodeId output);

  /// Reverse pass from a scalar `output`. Parameters that do not reach the
  /// output get exactly-zero gradients. Throws UsageError if `output` has not
  /// been evaluated by the latest forward pass.
  Gradients backward(NodeId output);

  const Tensor &value(NodeId id) const;
  /// Gradient of the last backward output with respect to node `id`.
  const Tensor &node_grad(NodeId id) const;

 private:
  struct Node {
    Node(OpKind k, std::vector<NodeId> in, Shape s, std::string l)
      : kind(k), inputs(std::move(in)), shape(std::move(s)), label(std::move(l)) {}

    OpKind kind;
    std::vector<NodeId> inputs;
    Shape shape;
    std::string label;
    // Attributes.
    std::string input_name;
    Tensor constant;
    ParamId param = 0;
    bool trans_a = false;
    bool trans_b = false;
    std::size_t axis = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::optional<CustomOp> custom;
  };

  NodeId push(Node node);
  void check_id(NodeId id) const;
  void compute(NodeId id, const Inputs &inputs);
  void propagate(NodeId id);

  const ParamStore *store_;
  std::vector<Node> nodes_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::optional<NodeId> evaluated_upto_;
  std::optional<NodeId> backward_output_;
};

/// C = op(A) * op(B) for rank-2 tensors.
Tensor gemm(const Tensor &a, bool trans_a, const Tensor &b, bool trans_b);

} // namespace gremetl::num
