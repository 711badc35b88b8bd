// SPDX-License-Identifier: Apache-2.0
/**
 * @file   gru.hpp
 * @brief  Bias-free GRU cell over the concatenated state [h_{t-1}, x_t].
 *
 *   update    G1 = sigmoid(W_G1 [h, x])
 *   reset     G2 = sigmoid(W_G2 [h, x])
 *   candidate c  = tanh(W [G2 * h, x])
 *   state     h' = (1 - G1) * h + G1 * c
 *
 * Every weight matrix is [H, H + D].
 */
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "numcore/graph.hpp"
#include "numcore/rng.hpp"

namespace gremetl::learners {

/// Plain-value cell weights, used by the standalone `gru_step`.
struct GruCellParams {
  num::Tensor w_g1;
  num::Tensor w_g2;
  num::Tensor w;
  std::size_t hidden = 0;
  std::size_t input = 0;

  static GruCellParams zeros(std::size_t hidden, std::size_t input);
  void validate() const;
};

struct GruStepNodes {
  num::NodeId update_gate;
  num::NodeId reset_gate;
  num::NodeId candidate;
  num::NodeId state;
};

/// Cell whose weights live in a ParamStore (one group per cell).
class GruCell {
 public:
  GruCell() = default;
  GruCell(std::size_t hidden, std::size_t input, num::ParamStore &store,
          const std::string &name, num::Rng &rng);
  /// Wraps existing weights; registers them as one new group.
  GruCell(const GruCellParams &params, num::ParamStore &store,
          const std::string &name);

  /// `h` is [batch, H], `x` is [batch, D].
  GruStepNodes step(num::Graph &g, num::NodeId h, num::NodeId x) const;

  std::size_t hidden() const { return hidden_; }
  std::size_t input() const { return input_; }
  std::size_t group() const { return group_; }

 private:
  std::size_t hidden_ = 0;
  std::size_t input_ = 0;
  std::size_t group_ = 0;
  num::ParamId w_g1_ = 0, w_g2_ = 0, w_ = 0;
};

struct GruStepResult {
  std::vector<double> update_gate;
  std::vector<double> reset_gate;
  std::vector<double> candidate;
  std::vector<double> state;
};

/// One step for a single sample. Throws ShapeError on dimension mismatch.
GruStepResult gru_step(const GruCellParams &cell, std::span<const double> h_prev,
                       std::span<const double> x);

} // namespace gremetl::learners
