// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synthetic.hpp
 * @brief  Seeded synthetic task families and fixtures.
 *
 * quadratic_bowl: L(theta) = sum_i c_i (theta_i - m_i)^2. Per-dimension base
 *   curvatures are spread log-uniformly over [curvature_min, curvature_max]
 *   and jittered per task; minima are a shared centre plus per-task noise.
 * gaussian_blobs: one isotropic Gaussian cluster per class.
 * two_group_attributes: paired (semantic, attribute) records; the class is a
 *   (semantic prototype, attribute prototype) pair, so both groups matter.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "episodes/kmeans.hpp"
#include "episodes/letor.hpp"

namespace gremetl::episodes {

enum class FamilyKind { QuadraticBowl, GaussianBlobs, TwoGroupAttributes };

std::string family_name(FamilyKind kind);
FamilyKind parse_family(std::string_view name);

struct SyntheticFamilySpec {
  FamilyKind kind = FamilyKind::QuadraticBowl;
  std::size_t dimension = 8;
  double noise = 0.5;
  std::uint64_t seed = 0;

  double curvature_min = 0.02;
  double curvature_max = 2.0;
  /// Relative per-task curvature perturbation.
  double curvature_jitter = 0.2;
  /// Magnitude of the shared minimum centre.
  double center_scale = 3.0;

  std::size_t points_per_class = 60;
  double separation = 4.0;
  std::size_t attribute_dimension = 4;

  void validate() const;
};

struct QuadraticTask {
  std::vector<double> curvature;
  std::vector<double> minimum;

  double loss(std::span<const double> theta) const;
  std::vector<double> gradient(std::span<const double> theta) const;
};

struct LabeledPoints {
  Points features;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
};

struct PairedPoints {
  Points semantic;
  Points attributes;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
};

struct TaskFamily {
  FamilyKind kind = FamilyKind::QuadraticBowl;
  std::vector<QuadraticTask> quadratic;
  LabeledPoints blobs;
  PairedPoints paired;
};

/// `n_tasks` is the number of loss surfaces for quadratic_bowl and the
/// number of classes (domains) for the classification families.
TaskFamily synth_tasks(const SyntheticFamilySpec &spec, std::size_t n_tasks);

std::vector<QuadraticTask> quadratic_bowl(const SyntheticFamilySpec &spec,
                                          std::size_t n_tasks);
LabeledPoints gaussian_blobs(const SyntheticFamilySpec &spec, std::size_t classes);
PairedPoints two_group_attributes(const SyntheticFamilySpec &spec, std::size_t classes);

struct SyntheticLetorSpec {
  std::size_t clusters = 10;
  std::size_t queries_per_cluster = 12;
  std::size_t docs_per_query = 10;
  std::size_t dimension = 8;
  double separation = 6.0;
  std::uint64_t seed = 0;
};

/// LETOR records whose queries fall into `clusters` well-separated groups
/// of query-mean features; grades 0..2 follow a cluster-specific linear
/// scoring rule with a shared component.
std::vector<LetorRecord> synthetic_letor(const SyntheticLetorSpec &spec);

} // namespace gremetl::episodes
