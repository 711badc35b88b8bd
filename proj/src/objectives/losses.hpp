// SPDX-License-Identifier: Apache-2.0
/**
 * @file   losses.hpp
 * @brief  Differentiable training losses built on the numcore graph.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "numcore/graph.hpp"

namespace gremetl::objectives {

/// Mean over rows of -log softmax(logits)[label]. `logits` is [batch, N]
/// with N >= 2; throws UsageError for an out-of-range label.
num::NodeId cross_entropy(num::Graph &g, num::NodeId logits,
                          std::span<const std::size_t> labels);

struct RankLoss {
  num::NodeId loss;
  std::size_t pair_count = 0;
  /// Set when no pair has distinct grades; the loss is then a constant 0.
  bool no_pairs = false;
};

/// Mean over pairs (i, j) with grade_i > grade_j of
///   log(1 + exp(-(score_i - score_j)))
/// computed as -log sigmoid(score_i - score_j). `scores` is [n, 1].
///
/// With `groups`, only pairs inside the same group count; each group must
/// occupy one contiguous run of rows (UsageError otherwise).
RankLoss pairwise_rank_loss(num::Graph &g, num::NodeId scores,
                            std::span<const int> grades,
                            std::span<const std::int64_t> groups = {});

// Value-level conveniences.
double cross_entropy_value(std::span<const double> logits, std::size_t label);
double pairwise_rank_loss_value(std::span<const double> scores,
                                std::span<const int> grades);

} // namespace gremetl::objectives
