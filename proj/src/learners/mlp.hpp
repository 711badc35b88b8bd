// SPDX-License-Identifier: Apache-2.0
/**
 * @file   mlp.hpp
 * @brief  Fully connected network; one parameter group per layer.
 */
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "numcore/graph.hpp"
#include "numcore/rng.hpp"

namespace gremetl::learners {

enum class Activation { Sigmoid, Tanh };

const char *activation_name(Activation a);
Activation parse_activation(const std::string &name);

struct MlpSpec {
  /// Input width, hidden widths..., output width.
  std::vector<std::size_t> layer_widths;
  Activation activation = Activation::Tanh;

  /// Throws ValidationError unless there is at least one hidden layer and
  /// every width is positive.
  void validate() const;
  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
};

class Mlp {
 public:
  Mlp() = default;
  /// Registers weights [in, out] and biases [1, out] for every layer in
  /// `store`, each layer in its own group named `<prefix>.layer<i>`.
  Mlp(MlpSpec spec, num::ParamStore &store, const std::string &prefix,
      num::Rng &rng);

  /// `x` is [batch, input_width]; returns [batch, output_width]. Hidden
  /// layers use the activation, the output layer is affine.
  num::NodeId forward(num::Graph &g, num::NodeId x) const;

  const MlpSpec &spec() const { return spec_; }
  const std::vector<std::size_t> &groups() const { return groups_; }
  const std::vector<num::ParamId> &params() const { return params_; }

 private:
  struct Layer {
    num::ParamId weight;
    num::ParamId bias;
  };
  MlpSpec spec_;
  std::vector<Layer> layers_;
  std::vector<std::size_t> groups_;
  std::vector<num::ParamId> params_;
};

/// Affine map x W + b with W [in, out] and b [1, out].
num::NodeId affine(num::Graph &g, num::NodeId x, num::ParamId weight,
                   num::ParamId bias);

num::NodeId activate(num::Graph &g, num::NodeId x, Activation a);

} // namespace gremetl::learners
