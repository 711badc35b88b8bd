// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  Evaluation metrics: NDCG@k, top-1 accuracy and normal-approximation
 *         confidence intervals.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gremetl::objectives {

struct RankedItem {
  double score = 0.0;
  int grade = 0;
};

/// Items in their original order; ranking is by descending score with ties
/// kept in original order.
struct RankedList {
  std::vector<RankedItem> items;
};

/// DCG@k = sum_{i<=min(k,n)} (2^grade_i - 1) / log2(i + 1), normalised by the
/// ideal DCG. Returns 0 when the ideal DCG is 0. Throws UsageError on an
/// empty list, k == 0 or a negative grade.
double ndcg_at_k(const RankedList &list, std::size_t k);

/// NDCG@k for grades that are already in ranked order.
double ndcg_of_ordering(std::span<const int> ranked_grades, std::size_t k);

double dcg_of_ordering(std::span<const int> ranked_grades, std::size_t k);

double top1_accuracy(std::span<const std::size_t> predictions,
                     std::span<const std::size_t> labels);

struct MetricSummary {
  double mean = 0.0;
  double half_width = 0.0;
  double confidence_level = 0.99;
  std::size_t n_runs = 0;
};

/// Two-sided z quantile, e.g. 2.5758 for level 0.99.
double normal_quantile_two_sided(double level);

/// mean +- z * s / sqrt(n) with s the sample standard deviation. Throws
/// UsageError for fewer than two values or a level outside (0, 1).
MetricSummary confidence_interval(std::span<const double> values,
                                  double level = 0.99);

} // namespace gremetl::objectives
