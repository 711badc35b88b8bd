// SPDX-License-Identifier: Apache-2.0
#include "episodes/synthetic.hpp"

#include <cmath>

#include "common/error.hpp"
#include "numcore/rng.hpp"

namespace gremetl::episodes {

namespace {

enum Stream : std::uint64_t { Centres = 1, Tasks = 2, Samples = 3, Weights = 4 };

/// Cluster means at pairwise distance >= min_dist, drawn in a box that grows
/// whenever placement keeps failing.
Points separated_means(std::size_t n, std::size_t dim, double min_dist, num::Rng &rng) {
  double half = min_dist * std::max(1.0, std::pow(static_cast<double>(n),
                                                  1.0 / static_cast<double>(dim)));
  Points means;
  std::size_t failures = 0;
  while (means.size() < n) {
    Point p(dim);
    for (double &v : p)
      v = rng.uniform(-half, half);
    bool ok = true;
    for (const auto &m : means)
      if (squared_distance(p, m) < min_dist * min_dist) {
        ok = false;
        break;
      }
    if (ok) {
      means.push_back(std::move(p));
      continue;
    }
    if (++failures % 200 == 0)
      half *= 1.1;
  }
  return means;
}

Point around(const Point &mean, double noise, num::Rng &rng) {
  Point p = mean;
  for (double &v : p)
    v += noise * rng.normal();
  return p;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

} // namespace

std::string family_name(FamilyKind kind) {
  switch (kind) {
  case FamilyKind::QuadraticBowl:
    return "quadratic_bowl";
  case FamilyKind::GaussianBlobs:
    return "gaussian_blobs";
  case FamilyKind::TwoGroupAttributes:
    return "two_group_attributes";
  }
  return "unknown";
}

FamilyKind parse_family(std::string_view name) {
  if (name == "quadratic_bowl")
    return FamilyKind::QuadraticBowl;
  if (name == "gaussian_blobs")
    return FamilyKind::GaussianBlobs;
  if (name == "two_group_attributes")
    return FamilyKind::TwoGroupAttributes;
  throw ValidationError("task.family", "unknown family '" + std::string(name) +
                                         "' (expected quadratic_bowl, gaussian_blobs "
                                         "or two_group_attributes)");
}

void SyntheticFamilySpec::validate() const {
  if (dimension < 1)
    throw ValidationError("task.dimension", "must be at least 1");
  if (!(noise >= 0.0) || !std::isfinite(noise))
    throw ValidationError("task.noise", "must be finite and non-negative");
  if (!(curvature_min > 0.0 && curvature_max >= curvature_min) ||
      !std::isfinite(curvature_max))
    throw ValidationError("task.curvature", "need 0 < curvature_min <= curvature_max");
  if (!(curvature_jitter >= 0.0 && curvature_jitter < 1.0))
    throw ValidationError("task.curvature_jitter", "must lie in [0, 1)");
  if (!(center_scale >= 0.0) || !std::isfinite(center_scale))
    throw ValidationError("task.center_scale", "must be finite and non-negative");
  if (points_per_class == 0)
    throw ValidationError("task.points_per_class", "must be at least 1");
  if (!(separation > 0.0) || !std::isfinite(separation))
    throw ValidationError("task.separation", "must be positive");
  if (kind == FamilyKind::TwoGroupAttributes && attribute_dimension == 0)
    throw ValidationError("task.attribute_dimension", "must be at least 1");
}

double QuadraticTask::loss(std::span<const double> theta) const {
  if (theta.size() != minimum.size())
    throw ShapeError("QuadraticTask::loss: dimension mismatch");
  double l = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - minimum[i];
    l += curvature[i] * d * d;
  }
  return l;
}

std::vector<double> QuadraticTask::gradient(std::span<const double> theta) const {
  if (theta.size() != minimum.size())
    throw ShapeError("QuadraticTask::gradient: dimension mismatch");
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    g[i] = 2.0 * curvature[i] * (theta[i] - minimum[i]);
  return g;
}

std::vector<QuadraticTask> quadratic_bowl(const SyntheticFamilySpec &spec,
                                          std::size_t n_tasks) {
  spec.validate();
  const std::size_t d = spec.dimension;
  num::Rng centre_rng(num::derive_seed(spec.seed, {Centres}));
  std::vector<double> base(d), centre(d);
  const double lo = std::log(spec.curvature_min);
  const double hi = std::log(spec.curvature_max);
  for (std::size_t i = 0; i < d; ++i) {
    const double t = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    base[i] = std::exp(lo + (hi - lo) * t);
    centre[i] = spec.center_scale * (centre_rng.bernoulli(0.5) ? 1.0 : -1.0);
  }
  num::Rng rng(num::derive_seed(spec.seed, {Tasks}));
  std::vector<QuadraticTask> tasks(n_tasks);
  for (auto &t : tasks) {
    t.curvature.resize(d);
    t.minimum.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      t.curvature[i] = base[i] * (1.0 + spec.curvature_jitter * rng.uniform(-1.0, 1.0));
      t.minimum[i] = centre[i] + spec.noise * rng.normal();
    }
  }
  return tasks;
}

LabeledPoints gaussian_blobs(const SyntheticFamilySpec &spec, std::size_t classes) {
  spec.validate();
  if (classes < 2)
    throw ValidationError("task.n_tasks", "gaussian_blobs needs at least 2 classes");
  num::Rng centre_rng(num::derive_seed(spec.seed, {Centres}));
  const Points means = separated_means(classes, spec.dimension, spec.separation, centre_rng);
  num::Rng rng(num::derive_seed(spec.seed, {Samples}));
  LabeledPoints out;
  out.classes = classes;
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < spec.points_per_class; ++i) {
      out.features.push_back(around(means[c], spec.noise, rng));
      out.labels.push_back(c);
    }
  return out;
}

PairedPoints two_group_attributes(const SyntheticFamilySpec &spec, std::size_t classes) {
  spec.validate();
  if (classes < 2)
    throw ValidationError("task.n_tasks", "two_group_attributes needs at least 2 classes");
  const auto n_sem = static_cast<std::size_t>(
    std::ceil(std::sqrt(static_cast<double>(classes))));
  const std::size_t n_attr = (classes + n_sem - 1) / n_sem;
  num::Rng centre_rng(num::derive_seed(spec.seed, {Centres}));
  const Points sem = separated_means(n_sem, spec.dimension, spec.separation, centre_rng);
  const Points attr =
    separated_means(n_attr, spec.attribute_dimension, spec.separation, centre_rng);
  num::Rng rng(num::derive_seed(spec.seed, {Samples}));
  PairedPoints out;
  out.classes = classes;
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < spec.points_per_class; ++i) {
      out.semantic.push_back(around(sem[c / n_attr], spec.noise, rng));
      out.attributes.push_back(around(attr[c % n_attr], spec.noise, rng));
      out.labels.push_back(c);
    }
  return out;
}

TaskFamily synth_tasks(const SyntheticFamilySpec &spec, std::size_t n_tasks) {
  TaskFamily f;
  f.kind = spec.kind;
  switch (spec.kind) {
  case FamilyKind::QuadraticBowl:
    f.quadratic = quadratic_bowl(spec, n_tasks);
    break;
  case FamilyKind::GaussianBlobs:
    f.blobs = gaussian_blobs(spec, n_tasks);
    break;
  case FamilyKind::TwoGroupAttributes:
    f.paired = two_group_attributes(spec, n_tasks);
    break;
  }
  return f;
}

std::vector<LetorRecord> synthetic_letor(const SyntheticLetorSpec &spec) {
  if (spec.clusters < 2 || spec.queries_per_cluster == 0 || spec.docs_per_query < 2 ||
      spec.dimension == 0)
    throw ValidationError("synthetic_letor", "degenerate fixture size");
  const std::size_t d = spec.dimension;
  num::Rng centre_rng(num::derive_seed(spec.seed, {Centres}));
  const Points centres = separated_means(spec.clusters, d, spec.separation, centre_rng);
  num::Rng wrng(num::derive_seed(spec.seed, {Weights}));
  Point shared(d);
  for (double &v : shared)
    v = wrng.normal() / std::sqrt(static_cast<double>(d));
  Points weights(spec.clusters, shared);
  for (auto &w : weights)
    for (double &v : w)
      v += 0.7 * wrng.normal() / std::sqrt(static_cast<double>(d));

  num::Rng rng(num::derive_seed(spec.seed, {Samples}));
  std::vector<LetorRecord> out;
  std::int64_t qid = 0;
  for (std::size_t c = 0; c < spec.clusters; ++c)
    for (std::size_t q = 0; q < spec.queries_per_cluster; ++q) {
      ++qid;
      const Point offset = around(centres[c], 0.3, rng);
      for (std::size_t j = 0; j < spec.docs_per_query; ++j) {
        LetorRecord r;
        r.qid = qid;
        r.features = around(offset, 1.0, rng);
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k)
          s += weights[c][k] * (r.features[k] - offset[k]);
        r.relevance = s > 0.8 ? 2 : (s > -0.2 ? 1 : 0);
        for (double &v : r.features)
          v = round6(v);
        r.comment = "docid=q" + std::to_string(qid) + "d" + std::to_string(j);
        out.push_back(std::move(r));
      }
    }
  return out;
}

} // namespace gremetl::episodes
