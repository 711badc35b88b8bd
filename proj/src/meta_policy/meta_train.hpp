// SPDX-License-Identifier: Apache-2.0
/**
 * @file   meta_train.hpp
 * @brief  Meta-training loop: a policy picks gradient-scaling coefficients
 *         and hyperparameters, the learner trains with scaled gradients and
 *         heldout performance is fed back as the REINFORCE reward.
 *
 * Per meta-epoch:
 *  1. draw u; explore (uniform actions for every slot) on the first epoch
 *     or when u < p_explore, else sample every slot from the policy;
 *  2. build a fresh learner from the chosen hyperparameters;
 *  3. for each learner epoch and each static batch: gradient, per-group
 *     scaling, SGD step at lr0 * decay^epoch, heldout reward R; when
 *     exploiting, a REINFORCE update on the scaling slots with R and a
 *     fresh draw of the scaling slots;
 *  4. evaluate the best-heldout learner on the test split; when exploiting,
 *     a REINFORCE update on the hyperparameter slots with that learner's
 *     heldout reward.
 * After the last meta-epoch the greedy policy trains one more learner,
 * whose heldout and test metrics form the run summary.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "meta_policy/environment.hpp"
#include "meta_policy/policy.hpp"

namespace gremetl::meta {

struct MetaTrainConfig {
  std::vector<double> lambda_grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> lr_grid{0.1};
  std::vector<double> decay_grid{1.0};
  std::vector<std::size_t> width_grid{16};
  double p_explore = 0.1;
  std::size_t meta_epochs = 50;
  bool baseline_enabled = true;
  std::uint64_t seed = 0;

  double meta_lr = 1.0;
  std::size_t learner_epochs = 1;
  double baseline_decay = 0.9;
  double policy_init_scale = 0.01;

  void validate() const;
};

struct EpochEntry {
  std::size_t epoch = 0;
  bool explored = false;
  bool failed = false;
  /// Coefficients in effect for the update that produced the best heldout
  /// learner of the epoch (the first choice if no update succeeded).
  std::vector<double> lambdas;
  HyperChoice hyper;
  /// Metrics of the best-heldout learner of this epoch.
  EvalMetrics heldout;
  EvalMetrics test;
  /// Reward credited to the hyperparameter slots (0 on failure).
  double reward = 0.0;
  double best_heldout_so_far = 0.0;
  std::size_t updates = 0;
};

struct RunSummary {
  double best_heldout = 0.0;
  std::vector<double> greedy_lambdas;
  HyperChoice greedy_hyper;
  bool final_failed = false;
  EvalMetrics final_heldout;
  EvalMetrics final_test;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<EpochEntry> entries;
  RunSummary summary;
  PolicyParams final_policy;
};

/// Called after every successful learner update; epoch == meta_epochs marks
/// the final greedy run.
using ParamObserver =
  std::function<void(std::size_t epoch, std::size_t update, const num::ParamStore &)>;

ActionSpaces make_action_spaces(const MetaTrainConfig &config,
                                std::size_t group_count);

RunRecord meta_train(const TaskEnvironment &env, const MetaTrainConfig &config,
                     std::uint64_t seed, const ParamObserver &observer = {});

/// Train one learner with fixed actions and no policy updates (used for the
/// final greedy evaluation and for `eval`).
struct FixedRunResult {
  bool failed = false;
  EvalMetrics heldout;
  EvalMetrics test;
  std::size_t updates = 0;
};
FixedRunResult run_fixed_actions(const TaskEnvironment &env,
                                 const std::vector<double> &lambdas,
                                 const HyperChoice &hyper, std::size_t learner_epochs,
                                 std::uint64_t init_seed,
                                 const std::function<void(std::size_t,
                                                          const num::ParamStore &)>
                                   &observer = {});

/// Seed used to initialise learners for a run with master seed `seed`.
std::uint64_t learner_init_seed(std::uint64_t seed);

} // namespace gremetl::meta
