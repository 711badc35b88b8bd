// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "numcore/graph.hpp"

namespace gremetl::num {

struct GradCheckEntry {
  ParamId param = 0;
  std::string name;
  /// ||g_ad - g_fd|| / max(1e-12, ||g_fd||) over the parameter tensor.
  double relative_error = 0.0;
  /// Largest elementwise |g_ad - g_fd|.
  double max_abs_error = 0.0;
  /// Both gradients lie below the finite-difference noise floor
  /// 100 * sqrt(n) * eps * max(1, |f|) / step, so the tensor is checked as
  /// an exact zero rather than by relative error.
  bool zero_gradient = false;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  bool passed() const;
  /// Over entries that are not zero gradients.
  double worst_relative_error() const;
  std::string to_string() const;
};

/// Compare `graph.backward(output)` against central finite differences of
/// the forward pass. Parameter values in `store` are perturbed in place and
/// restored before returning.
GradCheckReport grad_check(Graph &graph, ParamStore &store,
                           const Inputs &inputs, NodeId output,
                           double tolerance, double step = 1e-5);

} // namespace gremetl::num
