// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "numcore/params.hpp"

namespace gremetl::meta {

/// Multiply every gradient in group i by lambdas[i]. Throws UsageError on a
/// group-count mismatch or a non-positive lambda.
num::Gradients scale_gradients(const num::ParamStore &store,
                               const num::Gradients &grads,
                               std::span<const double> lambdas);

/// theta <- theta - lr * g, applied only if every updated value is finite.
/// Throws NumericError (leaving `store` untouched) otherwise.
void scaled_sgd_step(num::ParamStore &store, const num::Gradients &grads,
                     double lr);

/// lr0 * decay^epoch.
double lr_schedule(double lr0, double decay, std::size_t epoch);

} // namespace gremetl::meta
