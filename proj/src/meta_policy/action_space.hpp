// SPDX-License-Identifier: Apache-2.0
/**
 * @file   action_space.hpp
 * @brief  Discrete action slots chosen by the meta-learner.
 *
 * Slot layout: one gradient-scaling slot per parameter group, followed by
 * the learning-rate, decay and hidden-width slots.
 */
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gremetl::meta {

struct LambdaActionSpace {
  std::vector<double> grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  std::size_t n_groups = 1;

  /// Grid strictly positive and strictly increasing; n_groups >= 1.
  void validate() const;
};

struct HyperActionSpace {
  std::vector<double> lr_grid{0.1};
  std::vector<double> decay_grid{1.0};
  std::vector<std::size_t> width_grid{16};

  void validate() const;
};

enum class SlotKind { Lambda, LearningRate, Decay, Width };

struct HyperChoice {
  double lr = 0.1;
  double decay = 1.0;
  std::size_t width = 16;
};

class ActionSpaces {
 public:
  ActionSpaces(LambdaActionSpace lambda, HyperActionSpace hyper);

  std::size_t slot_count() const { return lambda_.n_groups + 3; }
  std::size_t slot_size(std::size_t slot) const;
  SlotKind slot_kind(std::size_t slot) const;
  std::string slot_name(std::size_t slot) const;

  std::size_t lambda_slots() const { return lambda_.n_groups; }
  std::size_t lr_slot() const { return lambda_.n_groups; }
  std::size_t decay_slot() const { return lambda_.n_groups + 1; }
  std::size_t width_slot() const { return lambda_.n_groups + 2; }

  const LambdaActionSpace &lambda() const { return lambda_; }
  const HyperActionSpace &hyper() const { return hyper_; }

 private:
  LambdaActionSpace lambda_;
  HyperActionSpace hyper_;
};

/// One chosen index per slot.
struct ActionChoice {
  std::vector<std::size_t> index;

  std::vector<double> lambdas(const ActionSpaces &spaces) const;
  HyperChoice hyper(const ActionSpaces &spaces) const;
};

} // namespace gremetl::meta
