// SPDX-License-Identifier: Apache-2.0
/**
 * @file   policy.hpp
 * @brief  Factored categorical policy over action slots, trained with
 *         REINFORCE.
 *
 * Each slot has an independent logit vector; a slot's distribution is
 * softmax(logits). For a recorded step (slot s, action a, reward R) the
 * update is
 *
 *   logits_s += meta_lr * (R - baseline) * d/d logits_s log softmax(logits_s)[a]
 *
 * and the gradient is taken through the numcore graph.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "meta_policy/action_space.hpp"
#include "numcore/rng.hpp"

namespace gremetl::meta {

struct PolicyParams {
  std::vector<std::vector<double>> logits;
  double meta_lr = 0.5;

  /// Logits drawn from N(0, init_scale^2) for every slot.
  static PolicyParams random_init(const ActionSpaces &spaces, double meta_lr,
                                  double init_scale, num::Rng &rng);

  void validate(const ActionSpaces &spaces) const;
  std::vector<double> probabilities(std::size_t slot) const;
};

struct TrajectoryStep {
  std::size_t slot = 0;
  std::size_t index = 0;
  double log_prob = 0.0;
  double reward = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  /// Number of decision rounds the steps were drawn in.
  std::size_t horizon = 0;
  /// Uniform exploration draws carry no policy log-probabilities.
  bool explored = false;
};

struct ExploreSchedule {
  double p_explore = 0.0;
  std::uint64_t stream = 0;

  void validate() const;
};

struct ActionSample {
  ActionChoice choice;
  /// One step per slot when sampled from the policy, empty when explored.
  std::vector<TrajectoryStep> steps;
  bool explored = false;
};

/// Draws u ~ U[0, 1) first. If `first_epoch` or u < p_explore, every slot is
/// chosen uniformly; otherwise every slot is sampled from the policy.
ActionSample sample_actions(const PolicyParams &policy, const ActionSpaces &spaces,
                            const ExploreSchedule &schedule, bool first_epoch,
                            num::Rng &rng);

/// Policy draws for the listed slots only; overwrites `choice.index` for
/// them and returns their steps.
std::vector<TrajectoryStep> sample_slots(const PolicyParams &policy,
                                         std::span<const std::size_t> slots,
                                         ActionChoice &choice, num::Rng &rng);

/// Most probable action per slot (lowest index on ties).
ActionChoice greedy_actions(const PolicyParams &policy);

/// Sum over steps of (R - baseline) * grad log pi(a); one vector per slot.
/// Throws UsageError for an exploration trajectory.
std::vector<std::vector<double>> reinforce_gradient(const PolicyParams &policy,
                                                    const Trajectory &trajectory,
                                                    double baseline);

/// Gradient ascent on the REINFORCE objective.
PolicyParams reinforce_update(const PolicyParams &policy,
                              const Trajectory &trajectory, double baseline);

/// Exponential moving average of rewards used as the advantage baseline.
class RewardBaseline {
 public:
  explicit RewardBaseline(double decay = 0.9, bool enabled = true)
    : decay_(decay), enabled_(enabled) {}

  double value() const { return enabled_ && initialised_ ? value_ : 0.0; }
  void observe(double reward);

 private:
  double decay_;
  bool enabled_;
  bool initialised_ = false;
  double value_ = 0.0;
};

} // namespace gremetl::meta
