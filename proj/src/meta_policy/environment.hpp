// SPDX-License-Identifier: Apache-2.0
/**
 * @file   environment.hpp
 * @brief  What the meta-training loop needs from a task: a way to build a
 *         learner for chosen hyperparameters, and per-learner training and
 *         evaluation hooks over fixed data splits.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meta_policy/action_space.hpp"
#include "numcore/params.hpp"

namespace gremetl::meta {

enum class Split { Heldout, Test };

struct EvalMetrics {
  /// Reward signal in [0, 1] (accuracy, NDCG or a loss-derived score).
  double reward = 0.0;
  double loss = 0.0;
  std::optional<double> accuracy;
  std::optional<double> ndcg1;
  std::optional<double> ndcg5;
};

class Learner {
 public:
  virtual ~Learner() = default;

  virtual num::ParamStore &params() = 0;
  /// Number of static D_train batches.
  virtual std::size_t batch_count() const = 0;
  /// Training loss and its gradients on one batch. Throws NumericError when
  /// the learner has diverged.
  virtual std::pair<double, num::Gradients> loss_and_gradients(std::size_t batch) = 0;
  virtual EvalMetrics evaluate(Split split) = 0;
};

class TaskEnvironment {
 public:
  virtual ~TaskEnvironment() = default;

  /// Parameter groups of every learner this environment builds (independent
  /// of the chosen width).
  virtual std::size_t group_count() const = 0;
  virtual std::vector<std::string> group_names() const = 0;
  virtual std::unique_ptr<Learner> make_learner(const HyperChoice &hyper,
                                                std::uint64_t init_seed) const = 0;
};

} // namespace gremetl::meta
