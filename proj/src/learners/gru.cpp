// SPDX-License-Identifier: Apache-2.0
#include "learners/gru.hpp"

#include "common/error.hpp"
#include "learners/init.hpp"

namespace gremetl::learners {

GruCellParams GruCellParams::zeros(std::size_t hidden, std::size_t input) {
  GruCellParams p;
  p.hidden = hidden;
  p.input = input;
  p.w_g1 = num::Tensor({hidden, hidden + input});
  p.w_g2 = num::Tensor({hidden, hidden + input});
  p.w = num::Tensor({hidden, hidden + input});
  return p;
}

void GruCellParams::validate() const {
  const num::Shape want{hidden, hidden + input};
  for (const num::Tensor *t : {&w_g1, &w_g2, &w})
    if (t->shape() != want)
      throw ShapeError("GRU weight has shape " + num::shape_string(t->shape()) +
                       ", expected " + num::shape_string(want));
}

GruCell::GruCell(std::size_t hidden, std::size_t input, num::ParamStore &store,
                 const std::string &name, num::Rng &rng)
  : hidden_(hidden), input_(input) {
  if (hidden == 0 || input == 0)
    throw ValidationError(name, "GRU sizes must be positive");
  group_ = store.add_group(name);
  const std::size_t cols = hidden + input;
  w_g1_ = store.add(group_, name + ".w_g1",
                    scaled_uniform(hidden, cols, cols, hidden, rng));
  w_g2_ = store.add(group_, name + ".w_g2",
                    scaled_uniform(hidden, cols, cols, hidden, rng));
  w_ = store.add(group_, name + ".w",
                 scaled_uniform(hidden, cols, cols, hidden, rng));
}

GruCell::GruCell(const GruCellParams &params, num::ParamStore &store,
                 const std::string &name)
  : hidden_(params.hidden), input_(params.input) {
  params.validate();
  group_ = store.add_group(name);
  w_g1_ = store.add(group_, name + ".w_g1", params.w_g1);
  w_g2_ = store.add(group_, name + ".w_g2", params.w_g2);
  w_ = store.add(group_, name + ".w", params.w);
}

GruStepNodes GruCell::step(num::Graph &g, num::NodeId h, num::NodeId x) const {
  const auto &hs = g.shape(h);
  const auto &xs = g.shape(x);
  if (hs.size() != 2 || xs.size() != 2 || hs[1] != hidden_ ||
      xs[1] != input_ || hs[0] != xs[0])
    throw ShapeError("GRU step: state " + num::shape_string(hs) + " and input " +
                     num::shape_string(xs) + " do not match cell H=" +
                     std::to_string(hidden_) + " D=" + std::to_string(input_));
  GruStepNodes n;
  const num::NodeId hx = g.concat({h, x}, 1);
  n.update_gate = g.sigmoid(g.matmul(hx, g.param(w_g1_), false, true));
  n.reset_gate = g.sigmoid(g.matmul(hx, g.param(w_g2_), false, true));
  const num::NodeId gated = g.concat({g.mul(n.reset_gate, h), x}, 1);
  n.candidate = g.tanh(g.matmul(gated, g.param(w_), false, true));
  n.state = g.add(g.mul(g.one_minus(n.update_gate), h),
                  g.mul(n.update_gate, n.candidate));
  return n;
}

GruStepResult gru_step(const GruCellParams &cell, std::span<const double> h_prev,
                       std::span<const double> x) {
  cell.validate();
  if (h_prev.size() != cell.hidden || x.size() != cell.input)
    throw ShapeError("gru_step: got h of length " + std::to_string(h_prev.size()) +
                     " and x of length " + std::to_string(x.size()) +
                     " for H=" + std::to_string(cell.hidden) +
                     " D=" + std::to_string(cell.input));
  num::ParamStore store;
  GruCell c(cell, store, "gru");
  num::Graph g(store);
  const num::NodeId h = g.input("h", {1, cell.hidden});
  const num::NodeId xi = g.input("x", {1, cell.input});
  const GruStepNodes n = c.step(g, h, xi);
  num::Inputs in;
  in.emplace("h", num::Tensor({1, cell.hidden},
                              std::vector<double>(h_prev.begin(), h_prev.end())));
  in.emplace("x", num::Tensor({1, cell.input},
                              std::vector<double>(x.begin(), x.end())));
  g.forward_eval(in, n.state);
  auto vec = [&](num::NodeId id) {
    auto v = g.value(id).values();
    return std::vector<double>(v.begin(), v.end());
  };
  return {vec(n.update_gate), vec(n.reset_gate), vec(n.candidate), vec(n.state)};
}

} // namespace gremetl::learners
