// SPDX-License-Identifier: Apache-2.0
/**
 * @file   config.hpp
 * @brief  Experiment configuration, parsed from JSON with field-path errors.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "episodes/domains.hpp"
#include "episodes/meta_set.hpp"
#include "episodes/synthetic.hpp"
#include "learners/dual_affinity.hpp"
#include "meta_policy/meta_train.hpp"

namespace gremetl::harness {

inline constexpr int kFormatVersion = 1;

enum class TaskSource { Synthetic, Letor, SyntheticLetor };
enum class LearnerKind { Direct, Mlp, DualAffinity };

std::string source_name(TaskSource s);
std::string learner_name(LearnerKind k);

struct TaskConfig {
  TaskSource source = TaskSource::Synthetic;
  episodes::SyntheticFamilySpec synthetic;
  std::size_t n_tasks = 20;
  std::string letor_path;
  std::optional<int> max_grade;
  episodes::SyntheticLetorSpec letor_fixture;
  episodes::DomainOptions domains;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Direct;
  learners::Activation activation = learners::Activation::Tanh;
  std::size_t hidden_layers = 1;
  std::size_t chunk_size = 4;
  bool attribute_trainable = false;
  std::size_t decoder_hidden = 8;
  std::size_t decoder_output = 8;
  std::optional<learners::Conv1dSpec> attribute_conv;
};

struct EpisodeConfig {
  episodes::MetaSetOptions meta_set;
  std::size_t train_tasks = 12;
  std::size_t heldout_tasks = 4;
  std::size_t test_tasks = 4;
};

struct ExperimentConfig {
  std::string label;
  TaskConfig task;
  LearnerConfig learner;
  EpisodeConfig episodes;
  meta::MetaTrainConfig meta_policy;
  std::size_t combos = 5;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";

  /// Cross-field checks; throws ValidationError with the offending path.
  void validate() const;
};

/// Unknown keys and type mismatches are reported as ValidationError.
ExperimentConfig config_from_json(const nlohmann::json &j);
ExperimentConfig load_config(const std::string &path);
nlohmann::json config_to_json(const ExperimentConfig &config);

/// FNV-1a over the canonical JSON of the configuration without output_dir.
std::string config_hash(const ExperimentConfig &config);

} // namespace gremetl::harness
