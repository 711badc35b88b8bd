// SPDX-License-Identifier: Apache-2.0
/**
 * @file   kmeans.hpp
 * @brief  Lloyd's k-means with k-means++ seeding and seeded restarts.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gremetl::episodes {

using Point = std::vector<double>;
using Points = std::vector<Point>;

struct KMeansResult {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;
  Points centroids;
  double wcss = 0.0;
  /// WCSS after each Lloyd iteration of the winning restart.
  std::vector<double> wcss_history;
  std::size_t iterations = 0;
};

double squared_distance(const Point &a, const Point &b);

/// Nearest centroid per point; ties go to the lowest centroid index.
std::vector<std::size_t> assign_nearest(const Points &points, const Points &centroids);

/// Cluster means; an empty cluster keeps its previous centroid.
Points update_centroids(const Points &points, const std::vector<std::size_t> &assignment,
                        const Points &previous);

double wcss(const Points &points, const std::vector<std::size_t> &assignment,
            const Points &centroids);

/// One Lloyd iteration (assign, then recompute means). Returns true if the
/// assignment changed.
bool lloyd_step(const Points &points, Points &centroids,
                std::vector<std::size_t> &assignment);

/// Throws UsageError for k < 2 or fewer points than k, DegenerateDataError
/// when there are fewer distinct points than k.
KMeansResult kmeans(const Points &points, std::size_t k, std::size_t restarts,
                    std::uint64_t seed, std::size_t max_iterations = 100);

} // namespace gremetl::episodes
