// SPDX-License-Identifier: Apache-2.0
#include "learners/mlp.hpp"

#include "common/error.hpp"
#include "learners/init.hpp"

namespace gremetl::learners {

const char *activation_name(Activation a) {
  return a == Activation::Sigmoid ? "sigmoid" : "tanh";
}

Activation parse_activation(const std::string &name) {
  if (name == "sigmoid")
    return Activation::Sigmoid;
  if (name == "tanh")
    return Activation::Tanh;
  throw ValidationError("activation", "expected 'sigmoid' or 'tanh', got '" +
                                        name + "'");
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 3)
    throw ValidationError("layer_widths",
                          "need input, at least one hidden and an output width");
  for (std::size_t i = 0; i < layer_widths.size(); ++i)
    if (layer_widths[i] == 0)
      throw ValidationError("layer_widths[" + std::to_string(i) + "]",
                            "width must be positive");
}

Mlp::Mlp(MlpSpec spec, num::ParamStore &store, const std::string &prefix,
         num::Rng &rng)
  : spec_(std::move(spec)) {
  spec_.validate();
  const auto &w = spec_.layer_widths;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const std::string name = prefix + ".layer" + std::to_string(i);
    const std::size_t group = store.add_group(name);
    Layer layer;
    layer.weight = store.add(group, name + ".weight",
                             scaled_uniform(w[i], w[i + 1], w[i], w[i + 1], rng));
    layer.bias = store.add(group, name + ".bias", num::Tensor({1, w[i + 1]}));
    layers_.push_back(layer);
    groups_.push_back(group);
    params_.push_back(layer.weight);
    params_.push_back(layer.bias);
  }
}

num::NodeId affine(num::Graph &g, num::NodeId x, num::ParamId weight,
                   num::ParamId bias) {
  const std::size_t batch = g.shape(x).at(0);
  num::NodeId xw = g.matmul(x, g.param(weight));
  return g.add(xw, g.repeat_rows(g.param(bias), batch));
}

num::NodeId activate(num::Graph &g, num::NodeId x, Activation a) {
  return a == Activation::Sigmoid ? g.sigmoid(x) : g.tanh(x);
}

num::NodeId Mlp::forward(num::Graph &g, num::NodeId x) const {
  if (layers_.empty())
    throw UsageError("Mlp::forward on an unbuilt network");
  const auto &s = g.shape(x);
  if (s.size() != 2 || s[1] != spec_.input_width())
    throw ShapeError("Mlp::forward: expected [batch, " +
                     std::to_string(spec_.input_width()) + "], got " +
                     num::shape_string(s));
  num::NodeId h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = affine(g, h, layers_[i].weight, layers_[i].bias);
    if (i + 1 < layers_.size())
      h = activate(g, h, spec_.activation);
  }
  return h;
}

} // namespace gremetl::learners
