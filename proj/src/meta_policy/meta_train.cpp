// SPDX-License-Identifier: Apache-2.0
#include "meta_policy/meta_train.hpp"

#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "meta_policy/scaling.hpp"
#include "numcore/rng.hpp"

namespace gremetl::meta {

namespace {

enum Stream : std::uint64_t { PolicyInit = 1, Actions = 2, LearnerInit = 3 };

EvalMetrics failed_metrics() {
  EvalMetrics m;
  m.reward = 0.0;
  m.loss = std::numeric_limits<double>::quiet_NaN();
  return m;
}

std::vector<std::size_t> lambda_slot_ids(const ActionSpaces &spaces) {
  std::vector<std::size_t> ids(spaces.lambda_slots());
  for (std::size_t s = 0; s < ids.size(); ++s)
    ids[s] = s;
  return ids;
}

std::vector<TrajectoryStep> steps_in(const std::vector<TrajectoryStep> &steps,
                                     std::size_t lo, std::size_t hi) {
  std::vector<TrajectoryStep> out;
  for (const auto &s : steps)
    if (s.slot >= lo && s.slot < hi)
      out.push_back(s);
  return out;
}

/// Per-update hook: receives the heldout reward of the freshly updated
/// learner and returns the coefficients to use for the next update.
using UpdateHook = std::function<std::vector<double>(double reward)>;

struct InnerResult {
  bool failed = false;
  bool has_best = false;
  EvalMetrics best_heldout;
  std::vector<double> best_lambdas;
  std::vector<num::Tensor> best_snapshot;
  std::size_t updates = 0;
};

InnerResult train_inner(Learner &learner, std::vector<double> lambdas,
                        const HyperChoice &hyper, std::size_t learner_epochs,
                        const UpdateHook &hook,
                        const std::function<void(std::size_t,
                                                 const num::ParamStore &)> &observer) {
  InnerResult res;
  const std::size_t batches = learner.batch_count();
  if (batches == 0)
    throw UsageError("meta_train: the meta-training set has no D_train batches");
  try {
    for (std::size_t epoch = 0; epoch < learner_epochs; ++epoch) {
      const double lr = lr_schedule(hyper.lr, hyper.decay, epoch);
      for (std::size_t b = 0; b < batches; ++b) {
        auto [loss, grads] = learner.loss_and_gradients(b);
        if (!std::isfinite(loss))
          throw NumericError("non-finite training loss");
        const auto scaled = scale_gradients(learner.params(), grads, lambdas);
        scaled_sgd_step(learner.params(), scaled, lr);
        if (observer)
          observer(res.updates, learner.params());
        ++res.updates;
        EvalMetrics m = learner.evaluate(Split::Heldout);
        if (!std::isfinite(m.reward) || !std::isfinite(m.loss))
          throw NumericError("non-finite heldout metrics");
        if (!res.has_best || m.reward > res.best_heldout.reward) {
          res.has_best = true;
          res.best_heldout = m;
          res.best_lambdas = lambdas;
          res.best_snapshot = learner.params().snapshot();
        }
        if (hook)
          lambdas = hook(m.reward);
      }
    }
  } catch (const NumericError &) {
    res.failed = true;
  }
  if (!res.has_best)
    res.best_lambdas = lambdas;
  return res;
}

} // namespace

void MetaTrainConfig::validate() const {
  LambdaActionSpace{lambda_grid, 1}.validate();
  HyperActionSpace{lr_grid, decay_grid, width_grid}.validate();
  ExploreSchedule{p_explore, 0}.validate();
  if (meta_epochs == 0)
    throw ValidationError("meta_epochs", "must be at least 1");
  if (learner_epochs == 0)
    throw ValidationError("learner_epochs", "must be at least 1");
  if (!(meta_lr > 0.0) || !std::isfinite(meta_lr))
    throw ValidationError("meta_lr", "must be a finite positive number");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0))
    throw ValidationError("baseline_decay", "must lie in [0, 1)");
  if (!(policy_init_scale >= 0.0) || !std::isfinite(policy_init_scale))
    throw ValidationError("policy_init_scale", "must be finite and non-negative");
}

ActionSpaces make_action_spaces(const MetaTrainConfig &config,
                                std::size_t group_count) {
  return ActionSpaces(LambdaActionSpace{config.lambda_grid, group_count},
                      HyperActionSpace{config.lr_grid, config.decay_grid,
                                       config.width_grid});
}

std::uint64_t learner_init_seed(std::uint64_t seed) {
  return num::derive_seed(seed, {LearnerInit});
}

FixedRunResult run_fixed_actions(
  const TaskEnvironment &env, const std::vector<double> &lambdas,
  const HyperChoice &hyper, std::size_t learner_epochs, std::uint64_t init_seed,
  const std::function<void(std::size_t, const num::ParamStore &)> &observer) {
  auto learner = env.make_learner(hyper, init_seed);
  InnerResult inner =
    train_inner(*learner, lambdas, hyper, learner_epochs, {}, observer);
  FixedRunResult out;
  out.failed = inner.failed;
  out.updates = inner.updates;
  if (!inner.has_best) {
    out.heldout = failed_metrics();
    out.test = failed_metrics();
    return out;
  }
  learner->params().restore(inner.best_snapshot);
  out.heldout = inner.best_heldout;
  out.test = learner->evaluate(Split::Test);
  return out;
}

RunRecord meta_train(const TaskEnvironment &env, const MetaTrainConfig &config,
                     std::uint64_t seed, const ParamObserver &observer) {
  config.validate();
  const ActionSpaces spaces = make_action_spaces(config, env.group_count());
  num::Rng init_rng(num::derive_seed(seed, {PolicyInit}));
  num::Rng rng(num::derive_seed(seed, {Actions}));
  const std::uint64_t init_seed = learner_init_seed(seed);
  const ExploreSchedule schedule{config.p_explore, Actions};
  const auto lambda_ids = lambda_slot_ids(spaces);

  RunRecord rec;
  rec.seed = seed;
  PolicyParams policy = PolicyParams::random_init(spaces, config.meta_lr,
                                                  config.policy_init_scale, init_rng);
  // Heldout reward rises along the inner trajectory, so each update position
  // keeps its own moving average.
  std::vector<RewardBaseline> lambda_baselines;
  RewardBaseline hyper_baseline(config.baseline_decay, config.baseline_enabled);
  double best_so_far = 0.0;

  for (std::size_t epoch = 0; epoch < config.meta_epochs; ++epoch) {
    ActionSample sample = sample_actions(policy, spaces, schedule, epoch == 0, rng);
    ActionChoice choice = sample.choice;
    const HyperChoice hyper = choice.hyper(spaces);
    std::vector<TrajectoryStep> lambda_steps =
      steps_in(sample.steps, 0, spaces.lambda_slots());
    const std::vector<TrajectoryStep> hyper_steps =
      steps_in(sample.steps, spaces.lambda_slots(), spaces.slot_count());

    std::size_t position = 0;
    UpdateHook hook = [&](double reward) {
      if (position == lambda_baselines.size())
        lambda_baselines.emplace_back(config.baseline_decay, config.baseline_enabled);
      RewardBaseline &baseline = lambda_baselines[position++];
      if (!sample.explored) {
        Trajectory traj;
        traj.horizon = 1;
        traj.steps = lambda_steps;
        for (auto &s : traj.steps)
          s.reward = reward;
        policy = reinforce_update(policy, traj, baseline.value());
        lambda_steps = sample_slots(policy, lambda_ids, choice, rng);
      }
      baseline.observe(reward);
      return choice.lambdas(spaces);
    };
    auto on_update = [&](std::size_t update, const num::ParamStore &store) {
      if (observer)
        observer(epoch, update, store);
    };

    auto learner = env.make_learner(hyper, init_seed);
    InnerResult inner = train_inner(*learner, choice.lambdas(spaces), hyper,
                                    config.learner_epochs, hook, on_update);

    EpochEntry e;
    e.epoch = epoch;
    e.explored = sample.explored;
    e.failed = inner.failed;
    e.lambdas = inner.best_lambdas;
    e.hyper = hyper;
    e.updates = inner.updates;
    if (inner.has_best) {
      learner->params().restore(inner.best_snapshot);
      e.heldout = inner.best_heldout;
      e.test = learner->evaluate(Split::Test);
    } else {
      e.heldout = failed_metrics();
      e.test = failed_metrics();
    }
    e.reward = inner.failed ? 0.0 : e.heldout.reward;
    best_so_far = std::max(best_so_far, e.heldout.reward);
    e.best_heldout_so_far = best_so_far;

    if (!sample.explored && !hyper_steps.empty()) {
      Trajectory traj;
      traj.horizon = 1;
      traj.steps = hyper_steps;
      for (auto &s : traj.steps)
        s.reward = e.reward;
      policy = reinforce_update(policy, traj, hyper_baseline.value());
    }
    hyper_baseline.observe(e.reward);
    rec.entries.push_back(std::move(e));
  }

  rec.final_policy = policy;
  const ActionChoice greedy = greedy_actions(policy);
  rec.summary.best_heldout = best_so_far;
  rec.summary.greedy_lambdas = greedy.lambdas(spaces);
  rec.summary.greedy_hyper = greedy.hyper(spaces);
  auto on_final = [&](std::size_t update, const num::ParamStore &store) {
    if (observer)
      observer(config.meta_epochs, update, store);
  };
  const FixedRunResult fin =
    run_fixed_actions(env, rec.summary.greedy_lambdas, rec.summary.greedy_hyper,
                      config.learner_epochs, init_seed, on_final);
  rec.summary.final_failed = fin.failed;
  rec.summary.final_heldout = fin.heldout;
  rec.summary.final_test = fin.test;
  return rec;
}

} // namespace gremetl::meta
