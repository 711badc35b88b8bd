// SPDX-License-Identifier: Apache-2.0
/**
 * @file   environments.hpp
 * @brief  Task environments binding data, a meta-set and a learner family.
 *
 * quadratic: theta in R^d with one group per coordinate; each D_train is one
 *   task surface; reward 1 / (1 + mean heldout loss).
 * classification: MLP or dual-encoder/affinity-decoder classifier trained
 *   with cross-entropy; reward is heldout top-1 accuracy.
 * ranking: MLP scorer over LETOR documents trained with the pairwise loss
 *   within each query; reward is mean heldout NDCG@5.
 */
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "episodes/letor.hpp"
#include "episodes/meta_set.hpp"
#include "episodes/synthetic.hpp"
#include "harness/config.hpp"
#include "meta_policy/environment.hpp"

namespace gremetl::harness {

/// Data shared by every combination of an experiment.
struct TaskData {
  TaskSource source = TaskSource::Synthetic;
  episodes::TaskFamily family;
  std::vector<episodes::LetorRecord> records;
  std::vector<episodes::QueryGroup> queries;
  /// Domain of each unit: class labels for classification, cluster ids of
  /// queries for ranking.
  std::vector<std::size_t> unit_domain;
  std::optional<episodes::DomainPartition> partition;
};

/// Loads or generates the task data; builds LETOR pseudo-domains.
TaskData load_task_data(const ExperimentConfig &config);

/// Meta-set of combination `combo` (seed derived from the task seed).
episodes::MetaSet make_combo_meta_set(const ExperimentConfig &config,
                                      const TaskData &data, std::size_t combo);

/// The environment keeps references to `config` and `data`.
std::unique_ptr<meta::TaskEnvironment>
make_environment(const ExperimentConfig &config, const TaskData &data,
                 const episodes::MetaSet &set);

/// Name of the reward metric ("inverse_loss", "accuracy" or "ndcg@5").
std::string reward_metric_name(const ExperimentConfig &config);

} // namespace gremetl::harness
