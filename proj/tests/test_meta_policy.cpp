// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <map>

#include "common/error.hpp"
#include "meta_policy/meta_train.hpp"
#include "meta_policy/reference_transform.hpp"
#include "meta_policy/scaling.hpp"
#include "numcore/graph.hpp"

using namespace gremetl;
using namespace gremetl::meta;
using num::ParamStore;
using num::Tensor;

namespace {

/// Sum of c_i (theta_i - m_i)^2 with one group per coordinate; batches are
/// alternative minima.
class BowlLearner : public Learner {
 public:
  BowlLearner(std::vector<double> curvature, std::vector<std::vector<double>> minima,
              std::vector<double> heldout_min, double init)
    : c_(std::move(curvature)), minima_(std::move(minima)), heldout_(std::move(heldout_min)) {
    for (std::size_t i = 0; i < c_.size(); ++i)
      store_.add(store_.add_group("theta" + std::to_string(i)), "theta",
                 Tensor::vector({init}));
  }

  ParamStore &params() override { return store_; }
  std::size_t batch_count() const override { return minima_.size(); }

  std::pair<double, num::Gradients> loss_and_gradients(std::size_t b) override {
    num::Gradients g;
    double loss = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      const double d = store_.value(i)[0] - minima_[b][i];
      loss += c_[i] * d * d;
      g.push_back(Tensor::vector({2.0 * c_[i] * d}));
    }
    return {loss, g};
  }

  EvalMetrics evaluate(Split) override {
    double loss = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      const double d = store_.value(i)[0] - heldout_[i];
      loss += c_[i] * d * d;
    }
    EvalMetrics m;
    m.loss = loss;
    m.reward = 1.0 / (1.0 + loss);
    return m;
  }

 private:
  std::vector<double> c_;
  std::vector<std::vector<double>> minima_;
  std::vector<double> heldout_;
  ParamStore store_;
};

class BowlEnv : public TaskEnvironment {
 public:
  std::vector<double> curvature{0.05, 1.0};
  std::vector<std::vector<double>> minima{{1.0, 1.0}, {1.2, 0.8}, {0.9, 1.1}, {1.1, 1.0}};
  std::vector<double> heldout{1.0, 1.0};

  std::size_t group_count() const override { return curvature.size(); }
  std::vector<std::string> group_names() const override { return {"theta0", "theta1"}; }
  std::unique_ptr<Learner> make_learner(const HyperChoice &, std::uint64_t) const override {
    return std::make_unique<BowlLearner>(curvature, minima, heldout, 0.0);
  }
};

MetaTrainConfig small_config() {
  MetaTrainConfig c;
  c.meta_epochs = 12;
  c.p_explore = 0.2;
  c.learner_epochs = 2;
  return c;
}

ActionSpaces two_by(std::vector<double> lambdas) {
  LambdaActionSpace l;
  l.grid = std::move(lambdas);
  l.n_groups = 1;
  return ActionSpaces(l, HyperActionSpace{});
}

} // namespace

TEST_SUITE("meta_policy.scaling") {
  TEST_CASE("per-group scaling") {
    ParamStore store;
    store.add(store.add_group("a"), "a", Tensor::vector({0.0}));
    store.add(store.add_group("b"), "b", Tensor::vector({0.0}));
    const num::Gradients g{Tensor::vector({1.0}), Tensor::vector({4.0})};
    const std::vector<double> lambdas{2.0, 0.5};
    const auto s = scale_gradients(store, g, lambdas);
    CHECK(s[0][0] == 2.0);
    CHECK(s[1][0] == 2.0);
  }

  TEST_CASE("direction within a group is preserved") {
    ParamStore store;
    store.add(store.add_group("g"), "w", Tensor::vector({0, 0, 0}));
    const num::Gradients g{Tensor::vector({1.0, -2.0, 0.5})};
    const std::vector<double> lambdas{3.7};
    const auto s = scale_gradients(store, g, lambdas);
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      dot += g[0][i] * s[0][i];
      na += g[0][i] * g[0][i];
      nb += s[0][i] * s[0][i];
    }
    CHECK(dot / std::sqrt(na * nb) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("errors") {
    ParamStore store;
    store.add(store.add_group("a"), "a", Tensor::vector({0.0}));
    const num::Gradients g{Tensor::vector({1.0})};
    CHECK_THROWS_AS(scale_gradients(store, g, std::vector<double>{1.0, 1.0}), UsageError);
    CHECK_THROWS_AS(scale_gradients(store, g, std::vector<double>{0.0}), UsageError);
    CHECK_THROWS_AS(scale_gradients(store, g, std::vector<double>{-1.0}), UsageError);
    CHECK_THROWS_AS(scale_gradients(store, {}, std::vector<double>{1.0}), UsageError);
  }

  TEST_CASE("sgd step") {
    ParamStore store;
    store.add(store.add_group("a"), "a", Tensor::vector({1.0}));
    scaled_sgd_step(store, {Tensor::vector({2.0})}, 0.1);
    CHECK(store.value(0)[0] == doctest::Approx(0.8).epsilon(1e-15));
    scaled_sgd_step(store, {Tensor::vector({0.0})}, 0.1);
    CHECK(store.value(0)[0] == doctest::Approx(0.8).epsilon(1e-15));
  }

  TEST_CASE("non-finite step leaves parameters untouched") {
    ParamStore store;
    store.add(store.add_group("a"), "a", Tensor::vector({1.0}));
    store.add(store.add_group("b"), "b", Tensor::vector({1.0}));
    CHECK_THROWS_AS(scaled_sgd_step(store, {Tensor::vector({1.0}), Tensor::vector({1e308})}, 1e10),
                    NumericError);
    CHECK(store.value(0)[0] == 1.0);
    CHECK(store.value(1)[0] == 1.0);
    CHECK_THROWS_AS(scaled_sgd_step(store, {Tensor::vector({1.0}), Tensor::vector({1.0})}, 0.0),
                    UsageError);
  }

  TEST_CASE("scaled descent on theta squared follows the closed form") {
    const double lr = 0.1;
    for (double lambda : {0.25, 1.0}) {
      ParamStore store;
      store.add(store.add_group("t"), "t", Tensor::vector({1.0}));
      for (int t = 0; t < 10; ++t) {
        const num::Gradients g{Tensor::vector({2.0 * store.value(0)[0]})};
        const std::vector<double> lam{lambda};
        scaled_sgd_step(store, scale_gradients(store, g, lam), lr);
      }
      CHECK(store.value(0)[0] == doctest::Approx(std::pow(1.0 - 2.0 * lr * lambda, 10)));
    }
  }

  TEST_CASE("learning-rate schedule") {
    CHECK(lr_schedule(0.1, 0.5, 3) == doctest::Approx(0.0125).epsilon(1e-15));
    CHECK(lr_schedule(0.1, 0.9, 0) == 0.1);
    double prev = lr_schedule(0.3, 0.8, 0);
    for (std::size_t e = 1; e < 20; ++e) {
      const double cur = lr_schedule(0.3, 0.8, e);
      CHECK(cur < prev);
      prev = cur;
    }
    CHECK_THROWS_AS(lr_schedule(0.0, 0.9, 1), UsageError);
  }
}

TEST_SUITE("meta_policy.actions") {
  TEST_CASE("slot layout") {
    LambdaActionSpace l;
    l.n_groups = 3;
    HyperActionSpace h;
    h.lr_grid = {0.01, 0.1};
    h.width_grid = {8, 16, 32};
    const ActionSpaces spaces(l, h);
    CHECK(spaces.slot_count() == 6);
    CHECK(spaces.slot_kind(2) == SlotKind::Lambda);
    CHECK(spaces.slot_kind(3) == SlotKind::LearningRate);
    CHECK(spaces.slot_size(3) == 2);
    CHECK(spaces.slot_size(5) == 3);
    CHECK_THROWS_AS(spaces.slot_size(6), UsageError);
    ActionChoice c{{0, 5, 2, 1, 0, 2}};
    CHECK(c.lambdas(spaces) == std::vector<double>{0.25, 8.0, 1.0});
    CHECK(c.hyper(spaces).lr == 0.1);
    CHECK(c.hyper(spaces).width == 32);
  }

  TEST_CASE("grids are validated") {
    LambdaActionSpace l;
    l.grid = {1.0, 0.5};
    CHECK_THROWS_AS(l.validate(), ValidationError);
    l.grid = {0.0, 1.0};
    CHECK_THROWS_AS(l.validate(), ValidationError);
    l.grid = {};
    CHECK_THROWS_AS(l.validate(), ValidationError);
    HyperActionSpace h;
    h.width_grid = {0};
    CHECK_THROWS_AS(h.validate(), ValidationError);
  }

  TEST_CASE("exploration always, never, and on the first epoch") {
    const ActionSpaces spaces = two_by({0.5, 1.0, 2.0});
    num::Rng rng(5);
    const auto policy = PolicyParams::random_init(spaces, 1.0, 0.01, rng);
    for (int t = 0; t < 200; ++t) {
      CHECK(sample_actions(policy, spaces, {1.0, 0}, false, rng).explored);
      const auto s = sample_actions(policy, spaces, {0.0, 0}, false, rng);
      CHECK_FALSE(s.explored);
      CHECK(s.steps.size() == spaces.slot_count());
      const auto first = sample_actions(policy, spaces, {0.0, 0}, true, rng);
      CHECK(first.explored);
      CHECK(first.steps.empty());
    }
  }

  TEST_CASE("exploration frequency matches p_explore") {
    const ActionSpaces spaces = two_by({0.5, 1.0, 2.0});
    num::Rng rng(17);
    const auto policy = PolicyParams::random_init(spaces, 1.0, 0.01, rng);
    const int n = 10000;
    int explored = 0;
    for (int t = 0; t < n; ++t)
      explored += sample_actions(policy, spaces, {0.3, 0}, false, rng).explored ? 1 : 0;
    const double sigma = std::sqrt(0.3 * 0.7 / n);
    CHECK(std::abs(explored / static_cast<double>(n) - 0.3) < 4.0 * sigma);
  }

  TEST_CASE("schedule validation") {
    CHECK_THROWS_AS((ExploreSchedule{1.5, 0}.validate()), ValidationError);
    CHECK_THROWS_AS((ExploreSchedule{-0.1, 0}.validate()), ValidationError);
  }

  TEST_CASE("greedy picks the lowest index on ties") {
    PolicyParams p;
    p.logits = {{0.0, 2.0, 2.0}, {1.0, 1.0}};
    const auto g = greedy_actions(p);
    CHECK(g.index == std::vector<std::size_t>{1, 0});
  }
}

TEST_SUITE("meta_policy.reinforce") {
  TEST_CASE("zero advantage leaves logits unchanged") {
    PolicyParams p;
    p.logits = {{0.3, -0.2, 0.1}};
    p.meta_lr = 1.0;
    Trajectory t;
    t.steps = {{0, 1, 0.0, 0.7}};
    t.horizon = 1;
    const auto next = reinforce_update(p, t, 0.7);
    CHECK(next.logits == p.logits);
  }

  TEST_CASE("two-action gradient") {
    PolicyParams p;
    p.logits = {{0.0, 0.0}};
    p.meta_lr = 1.0;
    Trajectory t;
    t.steps = {{0, 0, std::log(0.5), 1.0}};
    t.horizon = 1;
    const auto g = reinforce_gradient(p, t, 0.0);
    CHECK(g[0][0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g[0][1] == doctest::Approx(-0.5).epsilon(1e-15));
    const auto next = reinforce_update(p, t, 0.0);
    CHECK(next.logits[0][0] == doctest::Approx(0.5));
    CHECK(next.logits[0][1] == doctest::Approx(-0.5));
  }

  TEST_CASE("gradient matches the softmax closed form") {
    PolicyParams p;
    p.logits = {{0.4, -1.0, 0.7, 0.0}};
    Trajectory t;
    t.steps = {{0, 2, 0.0, 0.9}};
    t.horizon = 1;
    const auto g = reinforce_gradient(p, t, 0.4);
    double z = 0.0;
    for (double v : p.logits[0])
      z += std::exp(v);
    for (std::size_t i = 0; i < 4; ++i) {
      const double pi = std::exp(p.logits[0][i]) / z;
      CHECK(g[0][i] == doctest::Approx(0.5 * ((i == 2 ? 1.0 : 0.0) - pi)).epsilon(1e-13));
    }
  }

  TEST_CASE("exploration trajectories are rejected") {
    PolicyParams p;
    p.logits = {{0.0, 0.0}};
    Trajectory t;
    t.explored = true;
    CHECK_THROWS_AS(reinforce_update(p, t, 0.0), UsageError);
  }

  TEST_CASE("three-armed bandit converges to the paying arm") {
    const ActionSpaces spaces = two_by({1.0, 2.0, 4.0});
    num::Rng rng(11);
    PolicyParams p = PolicyParams::random_init(spaces, 0.5, 0.01, rng);
    RewardBaseline baseline(0.9);
    const std::vector<std::size_t> slots{0};
    for (int it = 0; it < 500; ++it) {
      ActionChoice c{std::vector<std::size_t>(spaces.slot_count(), 0)};
      Trajectory t;
      t.steps = sample_slots(p, slots, c, rng);
      t.horizon = 1;
      const double r = c.index[0] == 2 ? 1.0 : 0.0;
      for (auto &s : t.steps)
        s.reward = r;
      p = reinforce_update(p, t, baseline.value());
      baseline.observe(r);
    }
    CHECK(p.probabilities(0)[2] > 0.9);
  }

  TEST_CASE("moving-average baseline") {
    RewardBaseline b(0.9);
    CHECK(b.value() == 0.0);
    b.observe(1.0);
    CHECK(b.value() == 1.0);
    b.observe(0.0);
    CHECK(b.value() == doctest::Approx(0.9));
    RewardBaseline off(0.9, false);
    off.observe(1.0);
    CHECK(off.value() == 0.0);
  }
}

TEST_SUITE("meta_policy.reference_transform") {
  LossBuilder square_loss(std::vector<num::ParamId> ids) {
    return [ids](num::Graph &g) {
      std::vector<num::NodeId> terms;
      for (auto id : ids) {
        const auto p = g.param(id);
        terms.push_back(g.sum(g.mul(p, p)));
      }
      num::NodeId acc = terms[0];
      for (std::size_t i = 1; i < terms.size(); ++i)
        acc = g.add(acc, terms[i]);
      return acc;
    };
  }

  TEST_CASE("a linear transform equals uniform scaling") {
    ParamStore a, b;
    for (ParamStore *s : {&a, &b}) {
      s->add(s->add_group("x"), "x", Tensor::vector({1.0, -2.0}));
      s->add(s->add_group("y"), "y", Tensor::vector({0.5}));
    }
    const auto step = reference_transform_step(square_loss({0, 1}), linear_transform(3.0), a, 0.05);
    CHECK(step.phi_slope == doctest::Approx(3.0));
    CHECK(step.loss == doctest::Approx(5.25));
    CHECK(step.transformed_loss == doctest::Approx(15.75));
    const num::Gradients g{Tensor::vector({2.0, -4.0}), Tensor::vector({1.0})};
    const std::vector<double> lam{3.0, 3.0};
    scaled_sgd_step(b, scale_gradients(b, g, lam), 0.05);
    for (std::size_t id = 0; id < 2; ++id)
      for (std::size_t i = 0; i < a.value(id).size(); ++i)
        CHECK(a.value(id)[i] == doctest::Approx(b.value(id)[i]).epsilon(1e-14));
  }

  TEST_CASE("identity transform is plain gradient descent") {
    ParamStore s;
    s.add(s.add_group("x"), "x", Tensor::vector({1.0}));
    reference_transform_step(square_loss({0}), linear_transform(1.0), s, 0.1);
    CHECK(s.value(0)[0] == doctest::Approx(0.8));
  }

  TEST_CASE("log transform scales by the inverse loss") {
    ParamStore s;
    s.add(s.add_group("x"), "x", Tensor::vector({2.0}));
    const auto step = reference_transform_step(
      square_loss({0}), [](num::Graph &g, num::NodeId l) { return g.log(l); }, s, 0.1);
    CHECK(step.phi_slope == doctest::Approx(0.25));
    CHECK(step.gradients[0][0] == doctest::Approx(1.0));
    CHECK(s.value(0)[0] == doctest::Approx(1.9));
  }

  TEST_CASE("a decreasing transform is rejected without touching parameters") {
    ParamStore s;
    s.add(s.add_group("x"), "x", Tensor::vector({1.0}));
    CHECK_THROWS_AS(reference_transform_step(square_loss({0}), linear_transform(-1.0), s, 0.1),
                    UsageError);
    CHECK(s.value(0)[0] == 1.0);
  }

  TEST_CASE("per-group scaling reaches a lower loss than any shared scale on a skewed bowl") {
    // Curvatures 0.05 and 1; 20 steps at lr 0.1 from (1, 1).
    auto final_loss = [](double l0, double l1) {
      double x = 1.0, y = 1.0;
      for (int t = 0; t < 20; ++t) {
        x -= 0.1 * l0 * 2.0 * 0.05 * x;
        y -= 0.1 * l1 * 2.0 * 1.0 * y;
      }
      return 0.05 * x * x + y * y;
    };
    const std::vector<double> grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    double best_shared = 1e9, best_split = 1e9;
    for (double a : grid) {
      best_shared = std::min(best_shared, final_loss(a, a));
      for (double b : grid)
        best_split = std::min(best_split, final_loss(a, b));
    }
    CHECK(best_split < best_shared);
  }
}

TEST_SUITE("meta_policy.meta_train") {
  TEST_CASE("config validation") {
    MetaTrainConfig c;
    c.meta_epochs = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = MetaTrainConfig{};
    c.p_explore = 1.1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = MetaTrainConfig{};
    c.meta_lr = std::nan("");
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = MetaTrainConfig{};
    c.baseline_decay = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }

  TEST_CASE("record shape and best-so-far monotonicity") {
    BowlEnv env;
    const auto rec = meta_train(env, small_config(), 3);
    REQUIRE(rec.entries.size() == 12);
    CHECK(rec.entries[0].explored);
    double prev = -1.0;
    for (std::size_t e = 0; e < rec.entries.size(); ++e) {
      const auto &entry = rec.entries[e];
      CHECK(entry.epoch == e);
      CHECK(entry.lambdas.size() == 2);
      CHECK(entry.updates == 8);
      CHECK(entry.best_heldout_so_far >= prev);
      CHECK(entry.best_heldout_so_far >= entry.heldout.reward);
      prev = entry.best_heldout_so_far;
    }
    CHECK(rec.summary.best_heldout == prev);
    CHECK(rec.summary.greedy_lambdas.size() == 2);
    CHECK(rec.final_policy.logits.size() == 5);
  }

  TEST_CASE("identical seeds give identical records") {
    BowlEnv env;
    const auto a = meta_train(env, small_config(), 9);
    const auto b = meta_train(env, small_config(), 9);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t e = 0; e < a.entries.size(); ++e) {
      CHECK(a.entries[e].explored == b.entries[e].explored);
      CHECK(a.entries[e].lambdas == b.entries[e].lambdas);
      CHECK(a.entries[e].heldout.reward == b.entries[e].heldout.reward);
    }
    CHECK(a.final_policy.logits == b.final_policy.logits);
    const auto c = meta_train(env, small_config(), 10);
    CHECK(c.final_policy.logits != a.final_policy.logits);
  }

  TEST_CASE("a single unit coefficient reduces to plain SGD") {
    BowlEnv env;
    MetaTrainConfig cfg = small_config();
    cfg.lambda_grid = {1.0};
    cfg.lr_grid = {0.1};
    cfg.decay_grid = {0.9};
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> seen;
    const auto rec = meta_train(env, cfg, 4,
                                [&](std::size_t epoch, std::size_t update, const ParamStore &s) {
                                  seen[{epoch, update}] = {s.value(0)[0], s.value(1)[0]};
                                });
    std::vector<std::vector<double>> plain;
    double x = 0.0, y = 0.0;
    for (std::size_t le = 0; le < cfg.learner_epochs; ++le) {
      const double lr = 0.1 * std::pow(0.9, static_cast<double>(le));
      for (const auto &m : env.minima) {
        const double gx = 2.0 * env.curvature[0] * (x - m[0]);
        const double gy = 2.0 * env.curvature[1] * (y - m[1]);
        x -= lr * gx;
        y -= lr * gy;
        plain.push_back({x, y});
      }
    }
    for (std::size_t e = 0; e <= cfg.meta_epochs; ++e)
      for (std::size_t u = 0; u < plain.size(); ++u) {
        REQUIRE(seen.count({e, u}) == 1);
        CHECK(seen[{e, u}][0] == doctest::Approx(plain[u][0]).epsilon(1e-14));
        CHECK(seen[{e, u}][1] == doctest::Approx(plain[u][1]).epsilon(1e-14));
      }
    CHECK(rec.summary.greedy_lambdas == std::vector<double>{1.0, 1.0});
  }

  TEST_CASE("fixed-action runs are reproducible") {
    BowlEnv env;
    const auto a = run_fixed_actions(env, {1.0, 0.5}, HyperChoice{}, 2, 1);
    const auto b = run_fixed_actions(env, {1.0, 0.5}, HyperChoice{}, 2, 1);
    CHECK_FALSE(a.failed);
    CHECK(a.updates == 8);
    CHECK(a.heldout.reward == b.heldout.reward);
  }

  TEST_CASE("a diverging learner marks the epoch failed") {
    BowlEnv env;
    env.curvature = {1e200, 1e200};
    MetaTrainConfig cfg = small_config();
    cfg.meta_epochs = 3;
    const auto rec = meta_train(env, cfg, 1);
    for (const auto &e : rec.entries) {
      CHECK(e.failed);
      CHECK(e.reward == 0.0);
    }
  }
}
