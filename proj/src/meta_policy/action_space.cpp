// SPDX-License-Identifier: Apache-2.0
#include "meta_policy/action_space.hpp"

#include <cmath>

#include "common/error.hpp"

namespace gremetl::meta {

void LambdaActionSpace::validate() const {
  if (grid.empty())
    throw ValidationError("lambda_grid", "must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::string path = "lambda_grid[" + std::to_string(i) + "]";
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
      throw ValidationError(path, "must be a finite positive number");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw ValidationError(path, "grid must be strictly increasing");
  }
  if (n_groups == 0)
    throw ValidationError("n_groups", "need at least one parameter group");
}

void HyperActionSpace::validate() const {
  if (lr_grid.empty())
    throw ValidationError("lr_grid", "must not be empty");
  for (std::size_t i = 0; i < lr_grid.size(); ++i)
    if (!(lr_grid[i] > 0.0) || !std::isfinite(lr_grid[i]))
      throw ValidationError("lr_grid[" + std::to_string(i) + "]",
                            "must be a finite positive number");
  if (decay_grid.empty())
    throw ValidationError("decay_grid", "must not be empty");
  for (std::size_t i = 0; i < decay_grid.size(); ++i)
    if (!(decay_grid[i] > 0.0 && decay_grid[i] <= 1.0))
      throw ValidationError("decay_grid[" + std::to_string(i) + "]",
                            "must lie in (0, 1]");
  if (width_grid.empty())
    throw ValidationError("width_grid", "must not be empty");
  for (std::size_t i = 0; i < width_grid.size(); ++i)
    if (width_grid[i] == 0)
      throw ValidationError("width_grid[" + std::to_string(i) + "]",
                            "must be positive");
}

ActionSpaces::ActionSpaces(LambdaActionSpace lambda, HyperActionSpace hyper)
  : lambda_(std::move(lambda)), hyper_(std::move(hyper)) {
  lambda_.validate();
  hyper_.validate();
}

std::size_t ActionSpaces::slot_size(std::size_t slot) const {
  switch (slot_kind(slot)) {
  case SlotKind::Lambda: return lambda_.grid.size();
  case SlotKind::LearningRate: return hyper_.lr_grid.size();
  case SlotKind::Decay: return hyper_.decay_grid.size();
  case SlotKind::Width: return hyper_.width_grid.size();
  }
  return 0;
}

SlotKind ActionSpaces::slot_kind(std::size_t slot) const {
  if (slot < lambda_.n_groups)
    return SlotKind::Lambda;
  if (slot == lr_slot())
    return SlotKind::LearningRate;
  if (slot == decay_slot())
    return SlotKind::Decay;
  if (slot == width_slot())
    return SlotKind::Width;
  throw UsageError("action slot " + std::to_string(slot) + " out of range");
}

std::string ActionSpaces::slot_name(std::size_t slot) const {
  switch (slot_kind(slot)) {
  case SlotKind::Lambda: return "lambda" + std::to_string(slot);
  case SlotKind::LearningRate: return "lr";
  case SlotKind::Decay: return "decay";
  case SlotKind::Width: return "width";
  }
  return {};
}

std::vector<double> ActionChoice::lambdas(const ActionSpaces &spaces) const {
  std::vector<double> out;
  out.reserve(spaces.lambda_slots());
  for (std::size_t s = 0; s < spaces.lambda_slots(); ++s)
    out.push_back(spaces.lambda().grid.at(index.at(s)));
  return out;
}

HyperChoice ActionChoice::hyper(const ActionSpaces &spaces) const {
  return {spaces.hyper().lr_grid.at(index.at(spaces.lr_slot())),
          spaces.hyper().decay_grid.at(index.at(spaces.decay_slot())),
          spaces.hyper().width_grid.at(index.at(spaces.width_slot()))};
}

} // namespace gremetl::meta
