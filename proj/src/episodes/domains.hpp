// SPDX-License-Identifier: Apache-2.0
/**
 * @file   domains.hpp
 * @brief  Pseudo-domain construction: standardise, cluster, and accept the
 *         partition only when its mean silhouette clears a threshold.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "common/error.hpp"
#include "episodes/kmeans.hpp"

namespace gremetl::episodes {

struct SilhouetteScore {
  std::size_t k = 0;
  double score = 0.0;
};

struct DomainPartition {
  std::vector<std::size_t> domain;
  std::size_t k = 0;
  double silhouette = 0.0;
  /// Silhouette at every K of the scan range that could be clustered.
  std::vector<SilhouetteScore> scan;
};

struct DomainOptions {
  std::size_t k = 10;
  double threshold = 0.5;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  std::size_t scan_min = 2;
  std::size_t scan_max = 12;
  bool standardize = true;
};

class DomainRejected : public Error {
 public:
  DomainRejected(const std::string &what, double silhouette,
                 std::vector<SilhouetteScore> scan)
    : Error(ErrorKind::Rejected, what), silhouette_(silhouette),
      scan_(std::move(scan)) {}

  double silhouette() const noexcept { return silhouette_; }
  const std::vector<SilhouetteScore> &scan() const noexcept { return scan_; }

 private:
  double silhouette_;
  std::vector<SilhouetteScore> scan_;
};

/// Mean silhouette with Euclidean distance; singleton clusters contribute 0.
/// Throws UsageError for k < 2 or an empty cluster.
double silhouette(const Points &points, const std::vector<std::size_t> &assignment,
                  std::size_t k);

/// Zero mean, unit variance per dimension; constant dimensions become 0.
Points standardize(const Points &points);

/// Throws DomainRejected when silhouette < threshold at options.k.
DomainPartition build_domains(const Points &points, const DomainOptions &options);

} // namespace gremetl::episodes
