// SPDX-License-Identifier: Apache-2.0
#include "objectives/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"

namespace gremetl::objectives {

double dcg_of_ordering(std::span<const int> ranked_grades, std::size_t k) {
  double dcg = 0.0;
  const std::size_t n = std::min(k, ranked_grades.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double gain = std::exp2(static_cast<double>(ranked_grades[i])) - 1.0;
    dcg += gain / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg;
}

double ndcg_of_ordering(std::span<const int> ranked_grades, std::size_t k) {
  if (ranked_grades.empty())
    throw UsageError("ndcg: empty list");
  if (k == 0)
    throw UsageError("ndcg: k must be at least 1");
  for (int gr : ranked_grades)
    if (gr < 0)
      throw UsageError("ndcg: negative relevance grade");
  std::vector<int> ideal(ranked_grades.begin(), ranked_grades.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg_of_ordering(ideal, k);
  if (idcg == 0.0)
    return 0.0;
  return dcg_of_ordering(ranked_grades, k) / idcg;
}

double ndcg_at_k(const RankedList &list, std::size_t k) {
  if (list.items.empty())
    throw UsageError("ndcg: empty list");
  std::vector<std::size_t> order(list.items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return list.items[a].score > list.items[b].score;
  });
  std::vector<int> grades;
  grades.reserve(order.size());
  for (auto i : order)
    grades.push_back(list.items[i].grade);
  return ndcg_of_ordering(grades, k);
}

double top1_accuracy(std::span<const std::size_t> predictions,
                     std::span<const std::size_t> labels) {
  if (predictions.size() != labels.size())
    throw UsageError("top1_accuracy: " + std::to_string(predictions.size()) +
                     " predictions for " + std::to_string(labels.size()) + " labels");
  if (labels.empty())
    throw UsageError("top1_accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw UsageError("confidence level must lie in (0, 1)");
  // Solve erfc(z / sqrt2) = 1 - level by bisection.
  const double target = 1.0 - level;
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

MetricSummary confidence_interval(std::span<const double> values, double level) {
  if (values.size() < 2)
    throw UsageError("confidence_interval: need at least two values, got " +
                     std::to_string(values.size()));
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values)
    ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  MetricSummary m;
  m.mean = mean;
  m.half_width = normal_quantile_two_sided(level) * sd / std::sqrt(n);
  m.confidence_level = level;
  m.n_runs = values.size();
  return m;
}

} // namespace gremetl::objectives
