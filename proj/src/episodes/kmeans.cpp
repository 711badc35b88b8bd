// SPDX-License-Identifier: Apache-2.0
#include "episodes/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "common/error.hpp"
#include "numcore/rng.hpp"

namespace gremetl::episodes {

namespace {

void check_points(const Points &points) {
  if (points.empty())
    throw UsageError("kmeans: no points");
  const std::size_t d = points.front().size();
  if (d == 0)
    throw UsageError("kmeans: points have no dimensions");
  for (const auto &p : points)
    if (p.size() != d)
      throw ShapeError("kmeans: points have differing dimensions");
}

Points plus_plus_seed(const Points &points, std::size_t k, num::Rng &rng) {
  Points centroids;
  centroids.push_back(points[rng.index(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    d2[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double v : d2)
      total += v;
    if (!(total > 0.0))
      throw DegenerateDataError("kmeans: all points coincide with chosen centroids");
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (d2[i] <= 0.0)
        continue;
      acc += d2[i];
      pick = i;
      if (target < acc)
        break;
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i)
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
  }
  return centroids;
}

} // namespace

double squared_distance(const Point &a, const Point &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::size_t> assign_nearest(const Points &points, const Points &centroids) {
  std::vector<std::size_t> out(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best) {
        best = d;
        out[i] = c;
      }
    }
  }
  return out;
}

Points update_centroids(const Points &points, const std::vector<std::size_t> &assignment,
                        const Points &previous) {
  const std::size_t d = points.front().size();
  Points sums(previous.size(), Point(d, 0.0));
  std::vector<std::size_t> counts(previous.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++counts[assignment[i]];
    for (std::size_t j = 0; j < d; ++j)
      sums[assignment[i]][j] += points[i][j];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (counts[c] == 0) {
      sums[c] = previous[c];
      continue;
    }
    for (double &v : sums[c])
      v /= static_cast<double>(counts[c]);
  }
  return sums;
}

double wcss(const Points &points, const std::vector<std::size_t> &assignment,
            const Points &centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    s += squared_distance(points[i], centroids.at(assignment[i]));
  return s;
}

bool lloyd_step(const Points &points, Points &centroids,
                std::vector<std::size_t> &assignment) {
  auto next = assign_nearest(points, centroids);
  const bool changed = next != assignment;
  assignment = std::move(next);
  centroids = update_centroids(points, assignment, centroids);
  return changed;
}

KMeansResult kmeans(const Points &points, std::size_t k, std::size_t restarts,
                    std::uint64_t seed, std::size_t max_iterations) {
  check_points(points);
  if (k < 2)
    throw UsageError("kmeans: k must be at least 2");
  if (points.size() < k)
    throw UsageError("kmeans: " + std::to_string(points.size()) +
                     " points cannot form " + std::to_string(k) + " clusters");
  if (restarts == 0)
    throw UsageError("kmeans: restarts must be at least 1");
  std::set<Point> distinct(points.begin(), points.end());
  if (distinct.size() == 1)
    throw DegenerateDataError("kmeans: all points are identical (single cluster)");
  if (distinct.size() < k)
    throw DegenerateDataError("kmeans: only " + std::to_string(distinct.size()) +
                              " distinct points for " + std::to_string(k) +
                              " clusters");

  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    num::Rng rng(num::derive_seed(seed, {r}));
    KMeansResult run;
    run.k = k;
    run.centroids = plus_plus_seed(points, k, rng);
    for (std::size_t it = 0; it < max_iterations; ++it) {
      const bool changed = lloyd_step(points, run.centroids, run.assignment);
      run.wcss_history.push_back(wcss(points, run.assignment, run.centroids));
      ++run.iterations;
      if (!changed)
        break;
    }
    run.wcss = run.wcss_history.back();
    if (run.wcss < best.wcss)
      best = std::move(run);
  }
  return best;
}

} // namespace gremetl::episodes
