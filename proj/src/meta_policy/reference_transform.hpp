// SPDX-License-Identifier: Apache-2.0
/**
 * @file   reference_transform.hpp
 * @brief  Explicit loss-surface transform step, theta <- theta - lr * grad phi(L).
 *
 * Used as the reference the per-group gradient scaling approximates. The
 * transform phi is spliced into the graph on top of the loss node, so the
 * gradient is obtained by differentiating phi(L) directly rather than by
 * applying the chain rule by hand.
 */
#pragma once

#include <functional>

#include "numcore/graph.hpp"

namespace gremetl::meta {

/// Builds the scalar loss L from parameters read out of the graph's store.
using LossBuilder = std::function<num::NodeId(num::Graph &)>;
/// Maps the loss node to phi(L).
using LossTransform = std::function<num::NodeId(num::Graph &, num::NodeId)>;

struct ReferenceStep {
  double loss = 0.0;
  double transformed_loss = 0.0;
  /// d phi / d L at the current loss.
  double phi_slope = 0.0;
  /// grad_theta phi(L), before the update was applied.
  num::Gradients gradients;
};

/// One step on phi(L). Throws UsageError (and leaves `store` unchanged) if
/// d phi / d L <= 0 at the current loss, since phi then no longer preserves
/// the descent directions of L.
ReferenceStep reference_transform_step(const LossBuilder &loss,
                                       const LossTransform &phi,
                                       num::ParamStore &store, double lr);

/// phi(L) = c * L.
LossTransform linear_transform(double c);

} // namespace gremetl::meta
