// SPDX-License-Identifier: Apache-2.0
#include "numcore/graph.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace gremetl::num {

const char *op_name(OpKind kind) {
  switch (kind) {
  case OpKind::Input: return "input";
  case OpKind::Constant: return "constant";
  case OpKind::Parameter: return "parameter";
  case OpKind::MatMul: return "matmul";
  case OpKind::Add: return "add";
  case OpKind::Mul: return "mul";
  case OpKind::Concat: return "concat";
  case OpKind::Slice: return "slice";
  case OpKind::Sigmoid: return "sigmoid";
  case OpKind::Tanh: return "tanh";
  case OpKind::Softmax: return "softmax";
  case OpKind::LogSoftmax: return "log_softmax";
  case OpKind::Log: return "log";
  case OpKind::Mean: return "mean";
  case OpKind::Sum: return "sum";
  case OpKind::StopGradient: return "stop_gradient";
  case OpKind::Custom: return "custom";
  }
  return "?";
}

Tensor gemm(const Tensor &a, bool trans_a, const Tensor &b, bool trans_b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("gemm needs rank-2 operands");
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != kb)
    throw ShapeError("gemm inner dimensions differ: " + std::to_string(k) +
                     " vs " + std::to_string(kb));
  Tensor c({m, n}, 0.0);
  const std::size_t lda = a.cols();
  const std::size_t ldb = b.cols();
  auto av = a.values();
  auto bv = b.values();
  auto cv = c.values();
  for (std::size_t i = 0; i < m; ++i) {
    double *crow = cv.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = trans_a ? av[p * lda + i] : av[i * lda + p];
      if (aip == 0.0)
        continue;
      if (!trans_b) {
        const double *brow = bv.data() + p * ldb;
        for (std::size_t j = 0; j < n; ++j)
          crow[j] += aip * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j)
          crow[j] += aip * bv[j * ldb + p];
      }
    }
  }
  return c;
}

namespace {

std::size_t last_axis_len(const Shape &s) { return s.back(); }
std::size_t row_count(const Shape &s) { return s.size() == 2 ? s[0] : 1; }

} // namespace

// ---------------------------------------------------------------- building

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  evaluated_upto_.reset();
  backward_output_.reset();
  return nodes_.size() - 1;
}

void Graph::check_id(NodeId id) const {
  if (id >= nodes_.size())
    throw UsageError("unknown node id " + std::to_string(id));
}

std::string Graph::describe(NodeId id) const {
  check_id(id);
  std::string s = "node " + std::to_string(id) + " (" +
                  (nodes_[id].custom ? nodes_[id].custom->name
                                     : std::string(op_name(nodes_[id].kind)));
  if (!nodes_[id].label.empty())
    s += " '" + nodes_[id].label + "'";
  return s + ")";
}

void Graph::set_label(NodeId id, std::string label) {
  check_id(id);
  nodes_[id].label = std::move(label);
}

NodeId Graph::input(std::string name, Shape shape) {
  if (shape.empty() || shape.size() > 2 ||
      std::find(shape.begin(), shape.end(), 0u) != shape.end())
    throw ShapeError("input '" + name + "': invalid shape " + shape_string(shape));
  Node n{OpKind::Input, {}, std::move(shape), name};
  n.input_name = std::move(name);
  return push(std::move(n));
}

NodeId Graph::constant(Tensor value, std::string label) {
  Node n{OpKind::Constant, {}, value.shape(), std::move(label)};
  n.constant = std::move(value);
  return push(std::move(n));
}

NodeId Graph::param(ParamId id) {
  if (id >= store_->size())
    throw UsageError("unknown parameter id " + std::to_string(id));
  Node n{OpKind::Parameter, {}, store_->value(id).shape(), store_->name(id)};
  n.param = id;
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
  check_id(a);
  check_id(b);
  const Shape &sa = nodes_[a].shape;
  const Shape &sb = nodes_[b].shape;
  if (sa.size() != 2 || sb.size() != 2)
    throw ShapeError("matmul at node " + std::to_string(nodes_.size()) +
                     ": operands must be rank 2, got " + shape_string(sa) +
                     " and " + shape_string(sb));
  const std::size_t m = trans_a ? sa[1] : sa[0];
  const std::size_t k = trans_a ? sa[0] : sa[1];
  const std::size_t kb = trans_b ? sb[1] : sb[0];
  const std::size_t n = trans_b ? sb[0] : sb[1];
  if (k != kb)
    throw ShapeError("matmul at node " + std::to_string(nodes_.size()) +
                     ": inner dimensions differ, " + shape_string(sa) +
                     (trans_a ? "^T" : "") + " x " + shape_string(sb) +
                     (trans_b ? "^T" : ""));
  Node node{OpKind::MatMul, {a, b}, {m, n}, {}};
  node.trans_a = trans_a;
  node.trans_b = trans_b;
  return push(std::move(node));
}

NodeId Graph::add(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  if (nodes_[a].shape != nodes_[b].shape)
    throw ShapeError("add at node " + std::to_string(nodes_.size()) +
                     ": shapes " + shape_string(nodes_[a].shape) + " and " +
                     shape_string(nodes_[b].shape) + " differ");
  return push({OpKind::Add, {a, b}, nodes_[a].shape, {}});
}

NodeId Graph::mul(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  if (nodes_[a].shape != nodes_[b].shape)
    throw ShapeError("mul at node " + std::to_string(nodes_.size()) +
                     ": shapes " + shape_string(nodes_[a].shape) + " and " +
                     shape_string(nodes_[b].shape) + " differ");
  return push({OpKind::Mul, {a, b}, nodes_[a].shape, {}});
}

NodeId Graph::concat(const std::vector<NodeId> &parts, std::size_t axis) {
  if (parts.empty())
    throw ShapeError("concat at node " + std::to_string(nodes_.size()) +
                     ": no inputs");
  for (auto p : parts)
    check_id(p);
  Shape out = nodes_[parts[0]].shape;
  if (axis >= out.size())
    throw ShapeError("concat at node " + std::to_string(nodes_.size()) +
                     ": axis out of range");
  std::size_t total = 0;
  for (auto p : parts) {
    const Shape &s = nodes_[p].shape;
    if (s.size() != out.size())
      throw ShapeError("concat at node " + std::to_string(nodes_.size()) +
                       ": rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != out[d])
        throw ShapeError("concat at node " + std::to_string(nodes_.size()) +
                         ": shapes " + shape_string(out) + " and " +
                         shape_string(s) + " disagree off-axis");
    total += s[axis];
  }
  out[axis] = total;
  Node n{OpKind::Concat, parts, out, {}};
  n.axis = axis;
  return push(std::move(n));
}

NodeId Graph::slice(NodeId x, std::size_t axis, std::size_t begin,
                    std::size_t end) {
  check_id(x);
  Shape out = nodes_[x].shape;
  if (axis >= out.size() || begin >= end || end > out[axis])
    throw ShapeError("slice at node " + std::to_string(nodes_.size()) +
                     ": range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") on axis " + std::to_string(axis) +
                     " invalid for " + shape_string(out));
  out[axis] = end - begin;
  Node n{OpKind::Slice, {x}, out, {}};
  n.axis = axis;
  n.begin = begin;
  n.end = end;
  return push(std::move(n));
}

#define GREMETL_UNARY(fn, kind)                                                \
  NodeId Graph::fn(NodeId x) {                                                 \
    check_id(x);                                                               \
    return push({OpKind::kind, {x}, nodes_[x].shape, {}});                     \
  }

GREMETL_UNARY(sigmoid, Sigmoid)
GREMETL_UNARY(tanh, Tanh)
GREMETL_UNARY(softmax, Softmax)
GREMETL_UNARY(log_softmax, LogSoftmax)
GREMETL_UNARY(log, Log)
GREMETL_UNARY(stop_gradient, StopGradient)
#undef GREMETL_UNARY

NodeId Graph::mean(NodeId x) {
  check_id(x);
  return push({OpKind::Mean, {x}, {1}, {}});
}

NodeId Graph::sum(NodeId x) {
  check_id(x);
  return push({OpKind::Sum, {x}, {1}, {}});
}

NodeId Graph::custom(const CustomOp &op, const std::vector<NodeId> &inputs) {
  std::vector<Shape> shapes;
  for (auto i : inputs) {
    check_id(i);
    shapes.push_back(nodes_[i].shape);
  }
  Node n{OpKind::Custom, inputs, op.infer_shape(shapes), op.name};
  n.custom = op;
  return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double factor) {
  check_id(x);
  return mul(x, constant(Tensor(nodes_[x].shape, factor)));
}

NodeId Graph::sub(NodeId a, NodeId b) { return add(a, scale(b, -1.0)); }

NodeId Graph::one_minus(NodeId x) {
  check_id(x);
  return add(constant(Tensor(nodes_[x].shape, 1.0)), scale(x, -1.0));
}

NodeId Graph::repeat_rows(NodeId row, std::size_t rows) {
  check_id(row);
  return matmul(constant(Tensor({rows, 1}, 1.0)), row);
}

// ---------------------------------------------------------------- forward

const Tensor &Graph::value(NodeId id) const {
  check_id(id);
  if (!evaluated_upto_ || id > *evaluated_upto_)
    throw UsageError(describe(id) + " has not been evaluated");
  return values_[id];
}

const Tensor &Graph::forward_eval(const Inputs &inputs, NodeId output) {
  check_id(output);
  evaluated_upto_.reset();
  backward_output_.reset();
  values_.resize(nodes_.size());
  for (NodeId id = 0; id <= output; ++id) {
    compute(id, inputs);
    if (!all_finite(values_[id]))
      throw NumericError("non-finite value produced at " + describe(id));
  }
  evaluated_upto_ = output;
  return values_[output];
}

void Graph::compute(NodeId id, const Inputs &inputs) {
  const Node &n = nodes_[id];
  auto in = [&](std::size_t k) -> const Tensor & { return values_[n.inputs[k]]; };
  Tensor &out = values_[id];

  switch (n.kind) {
  case OpKind::Input: {
    auto it = inputs.find(n.input_name);
    if (it == inputs.end())
      throw ShapeError(describe(id) + ": no value supplied for input '" +
                       n.input_name + "'");
    if (it->second.shape() != n.shape)
      throw ShapeError(describe(id) + ": input '" + n.input_name +
                       "' expects shape " + shape_string(n.shape) + ", got " +
                       shape_string(it->second.shape()));
    out = it->second;
    break;
  }
  case OpKind::Constant:
    out = n.constant;
    break;
  case OpKind::Parameter: {
    const Tensor &p = store_->value(n.param);
    if (p.shape() != n.shape)
      throw ShapeError(describe(id) + ": parameter reshaped since graph build");
    out = p;
    break;
  }
  case OpKind::MatMul:
    out = gemm(in(0), n.trans_a, in(1), n.trans_b);
    break;
  case OpKind::Add: {
    out = in(0);
    auto b = in(1).values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i)
      o[i] += b[i];
    break;
  }
  case OpKind::Mul: {
    out = in(0);
    auto b = in(1).values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i)
      o[i] *= b[i];
    break;
  }
  case OpKind::Concat: {
    out = Tensor(n.shape, 0.0);
    const std::size_t rows = row_count(n.shape);
    const std::size_t out_cols = last_axis_len(n.shape);
    if (n.shape.size() == 2 && n.axis == 0) {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        auto src = in(k).values();
        std::copy(src.begin(), src.end(), out.values().begin() + offset);
        offset += src.size();
      }
    } else {
      std::size_t col0 = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor &src = in(k);
        const std::size_t c = last_axis_len(src.shape());
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < c; ++j)
            out.values()[r * out_cols + col0 + j] = src.values()[r * c + j];
        col0 += c;
      }
    }
    break;
  }
  case OpKind::Slice: {
    const Tensor &src = in(0);
    out = Tensor(n.shape, 0.0);
    const std::size_t src_cols = last_axis_len(src.shape());
    if (src.rank() == 2 && n.axis == 0) {
      std::copy(src.values().begin() + n.begin * src_cols,
                src.values().begin() + n.end * src_cols, out.values().begin());
    } else {
      const std::size_t rows = row_count(src.shape());
      const std::size_t w = n.end - n.begin;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j)
          out.values()[r * w + j] = src.values()[r * src_cols + n.begin + j];
    }
    break;
  }
  case OpKind::Sigmoid: {
    out = in(0);
    for (double &v : out.values())
      v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                   : std::exp(v) / (1.0 + std::exp(v));
    break;
  }
  case OpKind::Tanh:
    out = in(0);
    for (double &v : out.values())
      v = std::tanh(v);
    break;
  case OpKind::Softmax:
  case OpKind::LogSoftmax: {
    out = in(0);
    const std::size_t rows = row_count(n.shape);
    const std::size_t cols = last_axis_len(n.shape);
    for (std::size_t r = 0; r < rows; ++r) {
      double *row = out.values().data() + r * cols;
      const double mx = *std::max_element(row, row + cols);
      double z = 0.0;
      for (std::size_t j = 0; j < cols; ++j)
        z += std::exp(row[j] - mx);
      if (n.kind == OpKind::Softmax) {
        for (std::size_t j = 0; j < cols; ++j)
          row[j] = std::exp(row[j] - mx) / z;
      } else {
        const double lse = mx + std::log(z);
        for (std::size_t j = 0; j < cols; ++j)
          row[j] -= lse;
      }
    }
    break;
  }
  case OpKind::Log:
    out = in(0);
    for (double &v : out.values())
      v = std::log(v);
    break;
  case OpKind::Mean:
  case OpKind::Sum: {
    double s = 0.0;
    for (double v : in(0).values())
      s += v;
    if (n.kind == OpKind::Mean)
      s /= static_cast<double>(in(0).size());
    out = Tensor::scalar(s);
    break;
  }
  case OpKind::StopGradient:
    out = in(0);
    break;
  case OpKind::Custom: {
    std::vector<const Tensor *> args;
    for (auto i : n.inputs)
      args.push_back(&values_[i]);
    out = n.custom->forward(args);
    if (out.shape() != n.shape)
      throw ShapeError(describe(id) + ": custom forward returned shape " +
                       shape_string(out.shape()) + ", expected " +
                       shape_string(n.shape));
    break;
  }
  }
}

// ---------------------------------------------------------------- backward

const Tensor &Graph::node_grad(NodeId id) const {
  check_id(id);
  if (!backward_output_ || id > *backward_output_)
    throw UsageError(describe(id) + " has no gradient; run backward first");
  return grads_[id];
}

Gradients Graph::backward(NodeId output) {
  check_id(output);
  if (!evaluated_upto_ || output > *evaluated_upto_)
    throw UsageError("backward called before forward_eval for " +
                     describe(output));
  if (values_[output].size() != 1)
    throw UsageError("backward needs a scalar output, " + describe(output) +
                     " has shape " + shape_string(nodes_[output].shape));

  grads_.assign(output + 1, Tensor());
  for (NodeId id = 0; id <= output; ++id)
    grads_[id] = Tensor(nodes_[id].shape, 0.0);
  grads_[output].values()[0] = 1.0;

  for (NodeId id = output + 1; id-- > 0;)
    propagate(id);

  Gradients result = zero_gradients(*store_);
  for (NodeId id = 0; id <= output; ++id) {
    if (nodes_[id].kind != OpKind::Parameter)
      continue;
    auto dst = result[nodes_[id].param].values();
    auto src = grads_[id].values();
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst[i] += src[i];
  }
  for (const auto &g : result)
    if (!all_finite(g))
      throw NumericError("non-finite gradient in backward pass");
  backward_output_ = output;
  return result;
}

void Graph::propagate(NodeId id) {
  const Node &n = nodes_[id];
  const Tensor &dy = grads_[id];
  const Tensor &y = values_[id];
  auto gin = [&](std::size_t k) -> Tensor & { return grads_[n.inputs[k]]; };
  auto xin = [&](std::size_t k) -> const Tensor & { return values_[n.inputs[k]]; };
  auto accumulate = [](Tensor &dst, const Tensor &src) {
    auto d = dst.values();
    auto s = src.values();
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] += s[i];
  };

  switch (n.kind) {
  case OpKind::Input:
  case OpKind::Constant:
  case OpKind::Parameter:
  case OpKind::StopGradient:
    break;
  case OpKind::MatMul: {
    const Tensor &a = xin(0);
    const Tensor &b = xin(1);
    accumulate(gin(0), n.trans_a ? gemm(b, n.trans_b, dy, true)
                                 : gemm(dy, false, b, !n.trans_b));
    accumulate(gin(1), n.trans_b ? gemm(dy, true, a, n.trans_a)
                                 : gemm(a, !n.trans_a, dy, false));
    break;
  }
  case OpKind::Add:
    accumulate(gin(0), dy);
    accumulate(gin(1), dy);
    break;
  case OpKind::Mul: {
    auto d = dy.values();
    auto a = xin(0).values();
    auto b = xin(1).values();
    auto ga = gin(0).values();
    auto gb = gin(1).values();
    for (std::size_t i = 0; i < d.size(); ++i) {
      ga[i] += d[i] * b[i];
      gb[i] += d[i] * a[i];
    }
    break;
  }
  case OpKind::Concat: {
    const std::size_t rows = row_count(n.shape);
    const std::size_t out_cols = last_axis_len(n.shape);
    if (n.shape.size() == 2 && n.axis == 0) {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        auto g = gin(k).values();
        for (std::size_t i = 0; i < g.size(); ++i)
          g[i] += dy.values()[offset + i];
        offset += g.size();
      }
    } else {
      std::size_t col0 = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        Tensor &g = gin(k);
        const std::size_t c = last_axis_len(g.shape());
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < c; ++j)
            g.values()[r * c + j] += dy.values()[r * out_cols + col0 + j];
        col0 += c;
      }
    }
    break;
  }
  case OpKind::Slice: {
    Tensor &g = gin(0);
    const std::size_t src_cols = last_axis_len(g.shape());
    if (g.rank() == 2 && n.axis == 0) {
      for (std::size_t i = 0; i < dy.size(); ++i)
        g.values()[n.begin * src_cols + i] += dy.values()[i];
    } else {
      const std::size_t rows = row_count(g.shape());
      const std::size_t w = n.end - n.begin;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j)
          g.values()[r * src_cols + n.begin + j] += dy.values()[r * w + j];
    }
    break;
  }
  case OpKind::Sigmoid: {
    auto g = gin(0).values();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += dy.values()[i] * y.values()[i] * (1.0 - y.values()[i]);
    break;
  }
  case OpKind::Tanh: {
    auto g = gin(0).values();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += dy.values()[i] * (1.0 - y.values()[i] * y.values()[i]);
    break;
  }
  case OpKind::Softmax:
  case OpKind::LogSoftmax: {
    const std::size_t rows = row_count(n.shape);
    const std::size_t cols = last_axis_len(n.shape);
    auto g = gin(0).values();
    for (std::size_t r = 0; r < rows; ++r) {
      const double *yr = y.values().data() + r * cols;
      const double *dr = dy.values().data() + r * cols;
      double *gr = g.data() + r * cols;
      if (n.kind == OpKind::Softmax) {
        double dot = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
          dot += dr[j] * yr[j];
        for (std::size_t j = 0; j < cols; ++j)
          gr[j] += yr[j] * (dr[j] - dot);
      } else {
        double total = 0.0;
        for (std::size_t j = 0; j < cols; ++j)
          total += dr[j];
        for (std::size_t j = 0; j < cols; ++j)
          gr[j] += dr[j] - std::exp(yr[j]) * total;
      }
    }
    break;
  }
  case OpKind::Log: {
    auto g = gin(0).values();
    auto x = xin(0).values();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += dy.values()[i] / x[i];
    break;
  }
  case OpKind::Mean:
  case OpKind::Sum: {
    auto g = gin(0).values();
    double d = dy.values()[0];
    if (n.kind == OpKind::Mean)
      d /= static_cast<double>(g.size());
    for (double &v : g)
      v += d;
    break;
  }
  case OpKind::Custom: {
    std::vector<const Tensor *> args;
    for (auto i : n.inputs)
      args.push_back(&values_[i]);
    auto parts = n.custom->backward(args, y, dy);
    if (parts.size() != n.inputs.size())
      throw UsageError(describe(id) + ": custom backward returned " +
                       std::to_string(parts.size()) + " gradients for " +
                       std::to_string(n.inputs.size()) + " inputs");
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (parts[k].shape() != gin(k).shape())
        throw ShapeError(describe(id) + ": custom gradient " +
                         std::to_string(k) + " has wrong shape");
      accumulate(gin(k), parts[k]);
    }
    break;
  }
  }
}

} // namespace gremetl::num
