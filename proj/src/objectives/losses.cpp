// SPDX-License-Identifier: Apache-2.0
#include "objectives/losses.hpp"

#include <vector>

#include "common/error.hpp"

namespace gremetl::objectives {

num::NodeId cross_entropy(num::Graph &g, num::NodeId logits,
                          std::span<const std::size_t> labels) {
  num::Shape s = g.shape(logits);
  if (s.size() == 1)
    s = {1, s[0]};
  const std::size_t rows = s[0];
  const std::size_t classes = s[1];
  if (classes < 2)
    throw UsageError("cross_entropy: need at least two classes");
  if (labels.size() != rows)
    throw UsageError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(rows) + " rows");
  num::Tensor mask(g.shape(logits), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] >= classes)
      throw UsageError("cross_entropy: label " + std::to_string(labels[r]) +
                       " out of range for " + std::to_string(classes) + " classes");
    mask[r * classes + labels[r]] = -1.0 / static_cast<double>(rows);
  }
  const num::NodeId picked = g.mul(g.log_softmax(logits), g.constant(std::move(mask)));
  return g.sum(picked);
}

RankLoss pairwise_rank_loss(num::Graph &g, num::NodeId scores,
                            std::span<const int> grades,
                            std::span<const std::int64_t> groups) {
  const num::Shape s = g.shape(scores);
  if (s.size() != 2 || s[1] != 1)
    throw ShapeError("pairwise_rank_loss: scores must be [n, 1], got " +
                     num::shape_string(s));
  const std::size_t n = s[0];
  if (grades.size() != n)
    throw UsageError("pairwise_rank_loss: " + std::to_string(n) + " scores but " +
                     std::to_string(grades.size()) + " grades");
  if (n < 2)
    throw UsageError("pairwise_rank_loss: need at least two items");
  if (!groups.empty() && groups.size() != n)
    throw UsageError("pairwise_rank_loss: group ids do not match scores");
  const num::NodeId col = scores;

  // Contiguous runs per group.
  struct Run {
    std::size_t begin, end;
  };
  std::vector<Run> runs;
  if (groups.empty()) {
    runs.push_back({0, n});
  } else {
    std::vector<std::int64_t> seen;
    std::size_t b = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i == n || groups[i] != groups[b]) {
        for (auto q : seen)
          if (q == groups[b])
            throw UsageError("pairwise_rank_loss: group " + std::to_string(q) +
                             " is not contiguous");
        seen.push_back(groups[b]);
        runs.push_back({b, i});
        b = i;
      }
    }
  }

  std::vector<num::NodeId> diffs;
  std::size_t pairs = 0;
  for (const Run &run : runs) {
    const std::size_t m = run.end - run.begin;
    std::vector<std::pair<std::size_t, std::size_t>> pr;
    for (std::size_t i = run.begin; i < run.end; ++i)
      for (std::size_t j = run.begin; j < run.end; ++j)
        if (grades[i] > grades[j])
          pr.emplace_back(i - run.begin, j - run.begin);
    if (pr.empty())
      continue;
    num::Tensor p({pr.size(), m}, 0.0);
    for (std::size_t k = 0; k < pr.size(); ++k) {
      p.at(k, pr[k].first) = 1.0;
      p.at(k, pr[k].second) = -1.0;
    }
    const num::NodeId block =
      m == n ? col : g.slice(col, 0, run.begin, run.end);
    diffs.push_back(g.matmul(g.constant(std::move(p)), block));
    pairs += pr.size();
  }

  RankLoss out;
  out.pair_count = pairs;
  if (pairs == 0) {
    out.no_pairs = true;
    out.loss = g.sum(g.mul(col, g.constant(num::Tensor(g.shape(col), 0.0))));
    return out;
  }
  const num::NodeId all = diffs.size() == 1 ? diffs[0] : g.concat(diffs, 0);
  out.loss = g.scale(g.mean(g.log(g.sigmoid(all))), -1.0);
  return out;
}

double cross_entropy_value(std::span<const double> logits, std::size_t label) {
  num::ParamStore store;
  num::Graph g(store);
  const num::NodeId x = g.constant(
    num::Tensor({1, logits.size()}, std::vector<double>(logits.begin(), logits.end())));
  const std::size_t labels[] = {label};
  const num::NodeId loss = cross_entropy(g, x, labels);
  return g.forward_eval({}, loss).item();
}

double pairwise_rank_loss_value(std::span<const double> scores,
                                std::span<const int> grades) {
  num::ParamStore store;
  num::Graph g(store);
  const num::NodeId x = g.constant(
    num::Tensor({scores.size(), 1}, std::vector<double>(scores.begin(), scores.end())));
  const RankLoss r = pairwise_rank_loss(g, x, grades);
  return g.forward_eval({}, r.loss).item();
}

} // namespace gremetl::objectives
