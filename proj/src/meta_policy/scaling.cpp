// SPDX-License-Identifier: Apache-2.0
#include "meta_policy/scaling.hpp"

#include <cmath>

#include "common/error.hpp"

namespace gremetl::meta {

num::Gradients scale_gradients(const num::ParamStore &store,
                               const num::Gradients &grads,
                               std::span<const double> lambdas) {
  if (lambdas.size() != store.group_count())
    throw UsageError("scale_gradients: " + std::to_string(lambdas.size()) +
                     " coefficients for " + std::to_string(store.group_count()) +
                     " parameter groups");
  if (grads.size() != store.size())
    throw UsageError("scale_gradients: gradient count does not match the store");
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    if (!(lambdas[i] > 0.0))
      throw UsageError("scale_gradients: coefficient " + std::to_string(i) +
                       " must be positive");
  num::Gradients out = grads;
  for (num::ParamId p = 0; p < store.size(); ++p) {
    if (out[p].shape() != store.value(p).shape())
      throw ShapeError("scale_gradients: gradient shape mismatch for " +
                       store.name(p));
    const double lambda = lambdas[store.group_of(p)];
    for (double &v : out[p].values())
      v *= lambda;
  }
  return out;
}

void scaled_sgd_step(num::ParamStore &store, const num::Gradients &grads,
                     double lr) {
  if (!(lr > 0.0))
    throw UsageError("scaled_sgd_step: learning rate must be positive");
  if (grads.size() != store.size())
    throw UsageError("scaled_sgd_step: gradient count does not match the store");
  std::vector<num::Tensor> next;
  next.reserve(store.size());
  for (num::ParamId p = 0; p < store.size(); ++p) {
    num::Tensor t = store.value(p);
    if (grads[p].shape() != t.shape())
      throw ShapeError("scaled_sgd_step: gradient shape mismatch for " +
                       store.name(p));
    auto g = grads[p].values();
    auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] -= lr * g[i];
      if (!std::isfinite(v[i]))
        throw NumericError("scaled_sgd_step: non-finite update in " +
                           store.name(p));
    }
    next.push_back(std::move(t));
  }
  store.restore(next);
}

double lr_schedule(double lr0, double decay, std::size_t epoch) {
  if (!(lr0 > 0.0))
    throw UsageError("lr_schedule: lr0 must be positive");
  return lr0 * std::pow(decay, static_cast<double>(epoch));
}

} // namespace gremetl::meta
