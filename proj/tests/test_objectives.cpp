// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "common/error.hpp"
#include "numcore/grad_check.hpp"
#include "numcore/rng.hpp"
#include "objectives/losses.hpp"
#include "objectives/metrics.hpp"
#include "oracles.hpp"

using namespace gremetl;
using namespace gremetl::objectives;
using num::Graph;
using num::NodeId;
using num::ParamStore;
using num::Tensor;

namespace {

double ce_graph(const std::vector<double> &logits, std::size_t label) {
  ParamStore store;
  Graph g(store);
  const NodeId l = g.constant(Tensor({1, logits.size()}, logits));
  const std::vector<std::size_t> labels{label};
  return g.forward_eval({}, cross_entropy(g, l, labels)).item();
}

double rank_graph(const std::vector<double> &scores, const std::vector<int> &grades) {
  ParamStore store;
  Graph g(store);
  const NodeId s = g.constant(Tensor({scores.size(), 1}, scores));
  return g.forward_eval({}, pairwise_rank_loss(g, s, grades).loss).item();
}

RankedList list_of(const std::vector<double> &scores, const std::vector<int> &grades) {
  RankedList l;
  for (std::size_t i = 0; i < scores.size(); ++i)
    l.items.push_back({scores[i], grades[i]});
  return l;
}

/// Scores that put the items in the given order.
RankedList in_order(const std::vector<int> &ranked) {
  RankedList l;
  for (std::size_t i = 0; i < ranked.size(); ++i)
    l.items.push_back({static_cast<double>(ranked.size() - i), ranked[i]});
  return l;
}

} // namespace

TEST_SUITE("objectives.cross_entropy") {
  TEST_CASE("uniform logits give ln 2") {
    CHECK(ce_graph({0.0, 0.0}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(cross_entropy_value(std::vector<double>{0.0, 0.0}, 1) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }

  TEST_CASE("saturated logits stay finite") {
    const double v = ce_graph({1e3, 0.0}, 0);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(0.0));
    CHECK(ce_graph({1e3, 0.0}, 1) == doctest::Approx(1e3));
  }

  TEST_CASE("shift invariance") {
    num::Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> l(4), shifted(4);
      const double c = rng.uniform(-50, 50);
      for (std::size_t i = 0; i < 4; ++i) {
        l[i] = rng.uniform(-3, 3);
        shifted[i] = l[i] + c;
      }
      CHECK(std::abs(ce_graph(l, 2) - ce_graph(shifted, 2)) < 1e-12);
    }
  }

  TEST_CASE("label range and class count are checked") {
    ParamStore store;
    Graph g(store);
    const NodeId l = g.constant(Tensor({1, 3}));
    CHECK_THROWS_AS(cross_entropy(g, l, std::vector<std::size_t>{3}), UsageError);
    const NodeId one = g.constant(Tensor({1, 1}));
    CHECK_THROWS_AS(cross_entropy(g, one, std::vector<std::size_t>{0}), UsageError);
  }

  TEST_CASE("grad_check") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      num::Rng rng(seed);
      ParamStore store;
      const auto grp = store.add_group("logits");
      Tensor t({4, 3});
      for (double &v : t.values())
        v = rng.uniform(-2, 2);
      const auto p = store.add(grp, "logits", t);
      Graph g(store);
      const NodeId loss = cross_entropy(g, g.param(p), std::vector<std::size_t>{0, 1, 2, 1});
      const auto report = num::grad_check(g, store, {}, loss, 1e-6);
      INFO(report.to_string());
      CHECK(report.passed());
    }
  }
}

TEST_SUITE("objectives.pairwise") {
  TEST_CASE("single-pair closed forms") {
    CHECK(rank_graph({5.0, 0.0}, {1, 0}) ==
          doctest::Approx(std::log1p(std::exp(-5.0))).epsilon(1e-14));
    CHECK(rank_graph({5.0, 0.0}, {1, 0}) == doctest::Approx(0.00671535).epsilon(1e-5));
    CHECK(rank_graph({0.0, 0.0}, {1, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(pairwise_rank_loss_value(std::vector<double>{0.0, 0.0}, std::vector<int>{1, 0}) ==
          doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("mean over all ordered pairs") {
    const std::vector<double> s{0.3, -1.0, 2.0};
    const std::vector<int> gr{2, 1, 0};
    double expect = 0.0;
    int pairs = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (gr[i] > gr[j]) {
          expect += std::log1p(std::exp(-(s[i] - s[j])));
          ++pairs;
        }
    CHECK(rank_graph(s, gr) == doctest::Approx(expect / pairs).epsilon(1e-14));
  }

  TEST_CASE("all grades equal is zero with a flag") {
    ParamStore store;
    Graph g(store);
    const NodeId s = g.constant(Tensor({3, 1}, {1.0, 2.0, 3.0}));
    const RankLoss r = pairwise_rank_loss(g, s, std::vector<int>{1, 1, 1});
    CHECK(r.no_pairs);
    CHECK(r.pair_count == 0);
    CHECK(g.forward_eval({}, r.loss).item() == 0.0);
  }

  TEST_CASE("constant shift leaves the loss unchanged") {
    num::Rng rng(8);
    for (int t = 0; t < 30; ++t) {
      std::vector<double> s(5), sh(5);
      std::vector<int> gr(5);
      const double c = rng.uniform(-10, 10);
      for (std::size_t i = 0; i < 5; ++i) {
        s[i] = rng.uniform(-2, 2);
        sh[i] = s[i] + c;
        gr[i] = static_cast<int>(rng.index(3));
      }
      gr[0] = 2;
      gr[1] = 0;
      CHECK(std::abs(rank_graph(s, gr) - rank_graph(sh, gr)) < 1e-12);
      CHECK(ndcg_at_k(list_of(s, gr), 5) == ndcg_at_k(list_of(sh, gr), 5));
    }
  }

  TEST_CASE("pairs are only formed within a query group") {
    ParamStore store;
    Graph g(store);
    const NodeId s = g.constant(Tensor({4, 1}, {0.0, 1.0, 5.0, 0.0}));
    const std::vector<int> grades{1, 0, 1, 0};
    const std::vector<std::int64_t> groups{7, 7, 9, 9};
    const RankLoss r = pairwise_rank_loss(g, s, grades, groups);
    CHECK(r.pair_count == 2);
    const double expect = (std::log1p(std::exp(1.0)) + std::log1p(std::exp(-5.0))) / 2.0;
    CHECK(g.forward_eval({}, r.loss).item() == doctest::Approx(expect).epsilon(1e-14));
    CHECK_THROWS_AS(pairwise_rank_loss(g, s, grades, std::vector<std::int64_t>{7, 9, 7, 9}),
                    UsageError);
  }

  TEST_CASE("length checks") {
    ParamStore store;
    Graph g(store);
    CHECK_THROWS_AS(pairwise_rank_loss(g, g.constant(Tensor({1, 1})), std::vector<int>{1}),
                    UsageError);
    CHECK_THROWS_AS(pairwise_rank_loss(g, g.constant(Tensor({2, 1})), std::vector<int>{1}),
                    UsageError);
  }

  TEST_CASE("grad_check") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      num::Rng rng(seed + 50);
      ParamStore store;
      const auto grp = store.add_group("scores");
      Tensor t({6, 1});
      for (double &v : t.values())
        v = rng.uniform(-2, 2);
      const auto p = store.add(grp, "scores", t);
      Graph g(store);
      const NodeId loss =
        pairwise_rank_loss(g, g.param(p), std::vector<int>{2, 0, 1, 1, 0, 2}).loss;
      const auto report = num::grad_check(g, store, {}, loss, 1e-6);
      INFO(report.to_string());
      CHECK(report.passed());
    }
  }
}

TEST_SUITE("objectives.ndcg") {
  TEST_CASE("perfect ordering is 1") {
    CHECK(ndcg_at_k(in_order({2, 1, 0}), 3) == 1.0);
  }

  TEST_CASE("reversed three-item ordering matches the oracle") {
    const double v = ndcg_at_k(in_order({0, 1, 2}), 3);
    CHECK(v == doctest::Approx(0.58688).epsilon(1e-5));
    CHECK(std::abs(v - oracle::ndcg_brute_force({0, 1, 2}, 3)) < 1e-12);
  }

  TEST_CASE("all-zero grades give 0") {
    CHECK(ndcg_at_k(in_order({0, 0, 0}), 2) == 0.0);
  }

  TEST_CASE("ties keep the original order") {
    const RankedList l = list_of({1.0, 1.0, 1.0}, {0, 2, 1});
    CHECK(ndcg_at_k(l, 3) == doctest::Approx(oracle::dcg({0, 2, 1}, 3) / oracle::dcg({2, 1, 0}, 3)));
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(ndcg_at_k(RankedList{}, 3), UsageError);
    CHECK_THROWS_AS(ndcg_at_k(in_order({1, 0}), 0), UsageError);
    CHECK_THROWS_AS(ndcg_at_k(in_order({-1, 0}), 1), UsageError);
  }

  TEST_CASE("range and ideal ordering property") {
    num::Rng rng(21);
    for (int t = 0; t < 500; ++t) {
      const std::size_t n = 1 + rng.index(8);
      std::vector<double> s(n);
      std::vector<int> gr(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.uniform(-1, 1);
        gr[i] = static_cast<int>(rng.index(4));
      }
      const double v = ndcg_at_k(list_of(s, gr), 1 + rng.index(n));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      std::vector<int> sorted = gr;
      std::sort(sorted.rbegin(), sorted.rend());
      if (sorted.front() > 0)
        CHECK(ndcg_at_k(in_order(sorted), n) == 1.0);
    }
  }
}

TEST_SUITE("objectives.accuracy") {
  TEST_CASE("counting") {
    const std::vector<std::size_t> a{0, 1, 2}, b{0, 1, 0}, c{1, 2, 0};
    CHECK(top1_accuracy(a, a) == 1.0);
    CHECK(top1_accuracy(a, c) == 0.0);
    CHECK(top1_accuracy(a, b) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(top1_accuracy(a, std::vector<std::size_t>{0}), UsageError);
  }
}

TEST_SUITE("objectives.confidence_interval") {
  TEST_CASE("zero variance") {
    const auto s = confidence_interval(std::vector<double>{3, 3, 3, 3});
    CHECK(s.mean == 3.0);
    CHECK(s.half_width == 0.0);
    CHECK(s.n_runs == 4);
    CHECK(s.confidence_level == 0.99);
  }

  TEST_CASE("one to five") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    const auto s = confidence_interval(v);
    CHECK(s.mean == 3.0);
    CHECK(s.half_width == doctest::Approx(1.8213).epsilon(1e-4));
    CHECK(s.half_width == doctest::Approx(oracle::ci99(v).half_width).epsilon(1e-12));
  }

  TEST_CASE("z quantile") {
    CHECK(normal_quantile_two_sided(0.99) == doctest::Approx(2.5758).epsilon(1e-4));
    CHECK(normal_quantile_two_sided(0.95) == doctest::Approx(1.95996).epsilon(1e-5));
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(confidence_interval(std::vector<double>{1.0}), UsageError);
    CHECK_THROWS_AS(confidence_interval(std::vector<double>{1.0, 2.0}, 1.5), UsageError);
  }

  TEST_CASE("half-width shrinks as one over root n") {
    num::Rng rng(4);
    double ratio_sum = 0.0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
      std::vector<double> small(25), big(100);
      for (auto &v : small)
        v = rng.normal();
      for (auto &v : big)
        v = rng.normal();
      ratio_sum += confidence_interval(small).half_width / confidence_interval(big).half_width;
    }
    CHECK(ratio_sum / trials == doctest::Approx(2.0).epsilon(0.05));
  }
}
