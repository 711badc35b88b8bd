// SPDX-License-Identifier: Apache-2.0
#include "episodes/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gremetl::episodes {

double silhouette(const Points &points, const std::vector<std::size_t> &assignment,
                  std::size_t k) {
  if (k < 2)
    throw UsageError("silhouette: k must be at least 2");
  if (assignment.size() != points.size())
    throw UsageError("silhouette: assignment size does not match the points");
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a : assignment) {
    if (a >= k)
      throw UsageError("silhouette: cluster id out of range");
    ++counts[a];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] == 0)
      throw UsageError("silhouette: cluster " + std::to_string(c) + " is empty");

  double total = 0.0;
  std::vector<double> dist_sum(k);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t own = assignment[i];
    if (counts[own] == 1)
      continue;
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i)
        dist_sum[assignment[j]] += std::sqrt(squared_distance(points[i], points[j]));
    const double a = dist_sum[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own)
        b = std::min(b, dist_sum[c] / static_cast<double>(counts[c]));
    const double m = std::max(a, b);
    if (m > 0.0)
      total += (b - a) / m;
  }
  return total / static_cast<double>(points.size());
}

Points standardize(const Points &points) {
  if (points.empty())
    return {};
  const std::size_t d = points.front().size();
  const double n = static_cast<double>(points.size());
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto &p : points) {
    if (p.size() != d)
      throw ShapeError("standardize: points have differing dimensions");
    for (std::size_t j = 0; j < d; ++j)
      mean[j] += p[j] / n;
  }
  for (const auto &p : points)
    for (std::size_t j = 0; j < d; ++j)
      sd[j] += (p[j] - mean[j]) * (p[j] - mean[j]) / n;
  for (double &s : sd)
    s = std::sqrt(s);
  Points out = points;
  for (auto &p : out)
    for (std::size_t j = 0; j < d; ++j)
      p[j] = sd[j] > 0.0 ? (p[j] - mean[j]) / sd[j] : 0.0;
  return out;
}

DomainPartition build_domains(const Points &points, const DomainOptions &options) {
  if (options.k < 2)
    throw ValidationError("domains.k", "must be at least 2");
  const Points data = options.standardize ? standardize(points) : points;

  DomainPartition part;
  for (std::size_t k = options.scan_min; k <= options.scan_max; ++k) {
    if (k < 2 || k == options.k || k >= data.size())
      continue;
    try {
      const auto r = kmeans(data, k, options.restarts, options.seed);
      part.scan.push_back({k, silhouette(data, r.assignment, k)});
    } catch (const Error &) {
      // K not clusterable on this data; it is simply absent from the scan.
    }
  }

  const KMeansResult r = kmeans(data, options.k, options.restarts, options.seed);
  std::vector<std::size_t> assignment = r.assignment;
  // An empty cluster at the requested K is scored as a rejection.
  std::vector<std::size_t> counts(options.k, 0);
  for (std::size_t a : assignment)
    ++counts[a];
  const bool has_empty =
    std::find(counts.begin(), counts.end(), std::size_t{0}) != counts.end();
  const double score = has_empty ? -1.0 : silhouette(data, assignment, options.k);

  part.scan.push_back({options.k, score});
  std::sort(part.scan.begin(), part.scan.end(),
            [](const auto &a, const auto &b) { return a.k < b.k; });
  part.domain = std::move(assignment);
  part.k = options.k;
  part.silhouette = score;

  if (score < options.threshold) {
    std::ostringstream msg;
    msg << "silhouette " << score << " at K=" << options.k
        << " is below the threshold " << options.threshold << "; per-K scores:";
    for (const auto &s : part.scan)
      msg << " K=" << s.k << ":" << s.score;
    throw DomainRejected(msg.str(), score, part.scan);
  }
  return part;
}

} // namespace gremetl::episodes
