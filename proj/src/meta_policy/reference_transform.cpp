// SPDX-License-Identifier: Apache-2.0
#include "meta_policy/reference_transform.hpp"

#include "common/error.hpp"
#include "meta_policy/scaling.hpp"

namespace gremetl::meta {

ReferenceStep reference_transform_step(const LossBuilder &loss,
                                       const LossTransform &phi,
                                       num::ParamStore &store, double lr) {
  num::Graph g(store);
  const num::NodeId l = loss(g);
  const num::NodeId out = phi(g, l);
  if (g.shape(l) != num::Shape{1} || g.shape(out) != num::Shape{1})
    throw UsageError("reference_transform_step: loss and phi(loss) must be scalar");

  ReferenceStep step;
  step.transformed_loss = g.forward_eval({}, out).item();
  step.loss = g.value(l).item();
  step.gradients = g.backward(out);
  step.phi_slope = g.node_grad(l).item();
  if (!(step.phi_slope > 0.0))
    throw UsageError("reference_transform_step: phi'(L) = " +
                     std::to_string(step.phi_slope) +
                     " is not positive at L = " + std::to_string(step.loss));
  scaled_sgd_step(store, step.gradients, lr);
  return step;
}

LossTransform linear_transform(double c) {
  return [c](num::Graph &g, num::NodeId l) { return g.scale(l, c); };
}

} // namespace gremetl::meta
