// SPDX-License-Identifier: Apache-2.0
#include "meta_policy/policy.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "numcore/graph.hpp"

namespace gremetl::meta {

namespace {

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    z += p[i] = std::exp(logits[i] - mx);
  for (double &v : p)
    v /= z;
  return p;
}

std::size_t draw_categorical(std::span<const double> probs, num::Rng &rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc)
      return i;
  }
  return probs.size() - 1;
}

} // namespace

PolicyParams PolicyParams::random_init(const ActionSpaces &spaces, double meta_lr,
                                       double init_scale, num::Rng &rng) {
  PolicyParams p;
  p.meta_lr = meta_lr;
  for (std::size_t s = 0; s < spaces.slot_count(); ++s) {
    std::vector<double> l(spaces.slot_size(s));
    for (double &v : l)
      v = init_scale * rng.normal();
    p.logits.push_back(std::move(l));
  }
  return p;
}

void PolicyParams::validate(const ActionSpaces &spaces) const {
  if (logits.size() != spaces.slot_count())
    throw UsageError("policy has " + std::to_string(logits.size()) +
                     " slots, action spaces define " +
                     std::to_string(spaces.slot_count()));
  for (std::size_t s = 0; s < logits.size(); ++s)
    if (logits[s].size() != spaces.slot_size(s))
      throw UsageError("policy slot " + spaces.slot_name(s) + " has " +
                       std::to_string(logits[s].size()) + " logits, grid has " +
                       std::to_string(spaces.slot_size(s)));
  if (!(meta_lr > 0.0))
    throw ValidationError("meta_lr", "must be positive");
}

std::vector<double> PolicyParams::probabilities(std::size_t slot) const {
  return softmax(logits.at(slot));
}

void ExploreSchedule::validate() const {
  if (!(p_explore >= 0.0 && p_explore <= 1.0))
    throw ValidationError("p_explore", "must lie in [0, 1]");
}

ActionSample sample_actions(const PolicyParams &policy, const ActionSpaces &spaces,
                            const ExploreSchedule &schedule, bool first_epoch,
                            num::Rng &rng) {
  schedule.validate();
  policy.validate(spaces);
  ActionSample out;
  out.choice.index.assign(spaces.slot_count(), 0);
  const double u = rng.uniform();
  if (first_epoch || u < schedule.p_explore) {
    out.explored = true;
    for (std::size_t s = 0; s < spaces.slot_count(); ++s)
      out.choice.index[s] = rng.index(spaces.slot_size(s));
    return out;
  }
  std::vector<std::size_t> all(spaces.slot_count());
  for (std::size_t s = 0; s < all.size(); ++s)
    all[s] = s;
  out.steps = sample_slots(policy, all, out.choice, rng);
  return out;
}

std::vector<TrajectoryStep> sample_slots(const PolicyParams &policy,
                                         std::span<const std::size_t> slots,
                                         ActionChoice &choice, num::Rng &rng) {
  std::vector<TrajectoryStep> steps;
  steps.reserve(slots.size());
  for (std::size_t s : slots) {
    const auto p = policy.probabilities(s);
    const std::size_t a = draw_categorical(p, rng);
    if (choice.index.size() <= s)
      choice.index.resize(s + 1, 0);
    choice.index[s] = a;
    steps.push_back({s, a, std::log(p[a]), 0.0});
  }
  return steps;
}

ActionChoice greedy_actions(const PolicyParams &policy) {
  ActionChoice c;
  for (const auto &l : policy.logits)
    c.index.push_back(static_cast<std::size_t>(
      std::max_element(l.begin(), l.end()) - l.begin()));
  return c;
}

std::vector<std::vector<double>> reinforce_gradient(const PolicyParams &policy,
                                                    const Trajectory &trajectory,
                                                    double baseline) {
  if (trajectory.explored)
    throw UsageError("reinforce_update: exploration rounds carry no policy "
                     "log-probabilities");
  std::vector<std::vector<double>> grad;
  grad.reserve(policy.logits.size());
  for (const auto &l : policy.logits)
    grad.emplace_back(l.size(), 0.0);
  if (trajectory.steps.empty())
    return grad;

  num::ParamStore store;
  const std::size_t group = store.add_group("policy");
  std::vector<num::ParamId> ids;
  for (const auto &l : policy.logits)
    ids.push_back(store.add(group, "logits", num::Tensor::vector(l)));

  // objective = sum_t (R_t - b) * log softmax(logits_{s_t})[a_t]
  num::Graph g(store);
  std::vector<num::NodeId> terms;
  for (const auto &step : trajectory.steps) {
    if (step.slot >= policy.logits.size() ||
        step.index >= policy.logits[step.slot].size())
      throw UsageError("trajectory step refers to an unknown action");
    const num::NodeId logp =
      g.slice(g.log_softmax(g.param(ids[step.slot])), 0, step.index, step.index + 1);
    terms.push_back(g.scale(logp, step.reward - baseline));
  }
  const num::NodeId objective = g.sum(g.concat(terms, 0));
  g.forward_eval({}, objective);
  const num::Gradients grads = g.backward(objective);
  for (std::size_t s = 0; s < grad.size(); ++s)
    for (std::size_t i = 0; i < grad[s].size(); ++i)
      grad[s][i] = grads[ids[s]][i];
  return grad;
}

PolicyParams reinforce_update(const PolicyParams &policy,
                              const Trajectory &trajectory, double baseline) {
  const auto grad = reinforce_gradient(policy, trajectory, baseline);
  PolicyParams next = policy;
  for (std::size_t s = 0; s < next.logits.size(); ++s)
    for (std::size_t i = 0; i < next.logits[s].size(); ++i)
      next.logits[s][i] += policy.meta_lr * grad[s][i];
  for (const auto &l : next.logits)
    for (double v : l)
      if (!std::isfinite(v))
        throw NumericError("reinforce_update produced a non-finite logit");
  return next;
}

void RewardBaseline::observe(double reward) {
  if (!initialised_) {
    value_ = reward;
    initialised_ = true;
    return;
  }
  value_ = decay_ * value_ + (1.0 - decay_) * reward;
}

} // namespace gremetl::meta
