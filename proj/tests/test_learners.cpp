// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "common/error.hpp"
#include "learners/checkpoint.hpp"
#include "learners/dual_affinity.hpp"
#include "learners/gru.hpp"
#include "learners/init.hpp"
#include "learners/mlp.hpp"
#include "learners/spec_json.hpp"
#include "numcore/grad_check.hpp"
#include "objectives/losses.hpp"
#include "oracles.hpp"

using namespace gremetl;
using namespace gremetl::learners;
using num::Graph;
using num::NodeId;
using num::ParamStore;
using num::Rng;
using num::Tensor;

namespace {

Tensor random_tensor(num::Shape shape, Rng &rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = rng.uniform(lo, hi);
  return t;
}

DualAffinitySpec small_dual_spec(bool attribute_trainable = false,
                                 bool block = true, std::size_t heads = 3) {
  DualAffinitySpec s;
  s.encoder.semantic_encoder.layer_widths = {4, 5, 3};
  s.encoder.attribute_encoder.layer_widths = {4, 5, 6};
  s.encoder.chunk_size = 4;
  s.encoder.attribute_trainable = attribute_trainable;
  s.decoder.hidden_size = 6;
  s.decoder.output_width = 5;
  s.decoder.head_outputs = heads;
  s.decoder.block_encoder_gradient = block;
  return s;
}

bool is_attribute_param(const DualAffinityModel &model, num::ParamId id) {
  const auto &ids = model.encoder().attribute_params();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

} // namespace

TEST_SUITE("learners.init") {
  TEST_CASE("scaled uniform stays within the Glorot limit") {
    Rng rng(1);
    const Tensor t = scaled_uniform(10, 20, 10, 20, rng);
    const double limit = std::sqrt(6.0 / 30.0);
    double lo = 0, hi = 0;
    for (double v : t.values()) {
      CHECK(std::abs(v) <= limit);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi - lo > limit);
  }
}

TEST_SUITE("learners.mlp") {
  TEST_CASE("one parameter group per layer") {
    Rng rng(2);
    ParamStore store;
    MlpSpec spec{{3, 4, 2}, Activation::Tanh};
    const Mlp mlp(spec, store, "mlp", rng);
    CHECK(store.group_count() == 2);
    CHECK(mlp.params().size() == 4);
  }

  TEST_CASE("spec validation") {
    CHECK_THROWS_AS((MlpSpec{{3, 2}, Activation::Tanh}.validate()), ValidationError);
    CHECK_THROWS_AS((MlpSpec{{3, 0, 2}, Activation::Tanh}.validate()), ValidationError);
    CHECK(parse_activation("sigmoid") == Activation::Sigmoid);
    CHECK_THROWS(parse_activation("relu"));
  }

  TEST_CASE("grad_check over random seeds") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      ParamStore store;
      const Mlp mlp(MlpSpec{{4, 6, 5, 3}, seed % 2 ? Activation::Sigmoid : Activation::Tanh},
                    store, "mlp", rng);
      Graph g(store);
      const NodeId x = g.constant(random_tensor({5, 4}, rng));
      const std::vector<std::size_t> labels{0, 1, 2, 1, 0};
      const NodeId loss = objectives::cross_entropy(g, mlp.forward(g, x), labels);
      const auto report = num::grad_check(g, store, {}, loss, 1e-6);
      INFO(report.to_string());
      CHECK(report.passed());
    }
  }
}

TEST_SUITE("learners.gru") {
  TEST_CASE("zero weights halve the previous state") {
    const auto cell = GruCellParams::zeros(2, 3);
    const std::vector<double> h{1.0, -1.0}, x{0.3, -2.0, 5.0};
    const auto r = gru_step(cell, h, x);
    CHECK(r.update_gate == std::vector<double>{0.5, 0.5});
    CHECK(r.candidate == std::vector<double>{0.0, 0.0});
    CHECK(r.state == std::vector<double>{0.5, -0.5});
  }

  TEST_CASE("zero state and zero weights stay at zero") {
    const auto cell = GruCellParams::zeros(3, 2);
    const auto r = gru_step(cell, std::vector<double>{0, 0, 0}, std::vector<double>{1, 2});
    CHECK(r.state == std::vector<double>{0.0, 0.0, 0.0});
  }

  TEST_CASE("dimension mismatch is rejected") {
    const auto cell = GruCellParams::zeros(2, 3);
    CHECK_THROWS_AS(gru_step(cell, std::vector<double>{1.0}, std::vector<double>{1, 2, 3}),
                    ShapeError);
  }

  TEST_CASE("matches the plain-loop oracle and is a convex combination") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(num::derive_seed(seed, {9}));
      const std::size_t H = 1 + rng.index(5), D = 1 + rng.index(5);
      GruCellParams cell = GruCellParams::zeros(H, D);
      cell.w_g1 = random_tensor({H, H + D}, rng);
      cell.w_g2 = random_tensor({H, H + D}, rng);
      cell.w = random_tensor({H, H + D}, rng);
      std::vector<double> h(H), x(D);
      for (auto &v : h)
        v = rng.uniform(-2, 2);
      for (auto &v : x)
        v = rng.uniform(-2, 2);
      const auto r = gru_step(cell, h, x);
      const auto o = oracle::gru(cell.w_g1.storage(), cell.w_g2.storage(), cell.w.storage(), h, x);
      for (std::size_t i = 0; i < H; ++i) {
        CHECK(r.state[i] == doctest::Approx(o.h[i]).epsilon(1e-12));
        CHECK(r.update_gate[i] > 0.0);
        CHECK(r.update_gate[i] < 1.0);
        CHECK(r.reset_gate[i] > 0.0);
        CHECK(r.reset_gate[i] < 1.0);
        const double lo = std::min(h[i], r.candidate[i]);
        const double hi = std::max(h[i], r.candidate[i]);
        CHECK(r.state[i] >= lo - 1e-15);
        CHECK(r.state[i] <= hi + 1e-15);
      }
    }
  }

  TEST_CASE("grad_check of an unrolled cell") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed + 100);
      ParamStore store;
      const GruCell cell(3, 2, store, "gru", rng);
      Graph g(store);
      NodeId h = g.constant(random_tensor({2, 3}, rng));
      for (int t = 0; t < 3; ++t)
        h = cell.step(g, h, g.constant(random_tensor({2, 2}, rng))).state;
      const NodeId out = g.sum(g.mul(h, g.constant(random_tensor({2, 3}, rng))));
      const auto report = num::grad_check(g, store, {}, out, 1e-6);
      INFO(report.to_string());
      CHECK(report.passed());
    }
  }
}

TEST_SUITE("learners.dual_affinity") {
  TEST_CASE("semantic length 12 with chunk 4 gives three steps") {
    Rng rng(4);
    ParamStore store;
    DualEncoderSpec spec = small_dual_spec().encoder;
    const DualEncoder enc(spec, store, rng);
    Graph g(store);
    const NodeId sem = g.constant(random_tensor({2, 12}, rng));
    const NodeId attr = g.constant(random_tensor({2, 4}, rng));
    const auto out = enc.encode(g, sem, attr);
    CHECK(out.semantic_seq.size() == 3);
    CHECK(g.shape(out.attribute_enc) == num::Shape{2, 6});
  }

  TEST_CASE("identical chunks encode identically") {
    Rng rng(5);
    ParamStore store;
    const DualEncoder enc(small_dual_spec().encoder, store, rng);
    Graph g(store);
    const Tensor chunk = random_tensor({1, 4}, rng);
    Tensor sem({1, 8});
    for (std::size_t i = 0; i < 8; ++i)
      sem[i] = chunk[i % 4];
    const auto out = enc.encode(g, g.constant(sem), g.constant(random_tensor({1, 4}, rng)));
    const Tensor a = g.forward_eval({}, out.semantic_seq[0]);
    const Tensor b = g.forward_eval({}, out.semantic_seq[1]);
    CHECK(a == b);
  }

  TEST_CASE("indivisible semantic length is rejected") {
    Rng rng(6);
    ParamStore store;
    const DualEncoder enc(small_dual_spec().encoder, store, rng);
    Graph g(store);
    CHECK_THROWS_AS(enc.encode(g, g.constant(Tensor({1, 10})), g.constant(Tensor({1, 4}))),
                    ShapeError);
  }

  TEST_CASE("empty sequence is rejected by the decoder") {
    Rng rng(7);
    ParamStore store;
    const AffinityDecoder dec(small_dual_spec().decoder, 3, store, rng);
    Graph g(store);
    CHECK_THROWS_AS(dec.decode(g, {}, g.constant(Tensor({1, 6}))), UsageError);
  }

  TEST_CASE("static attribute encoder receives exactly zero gradient") {
    Rng rng(8);
    ParamStore store;
    const DualAffinityModel model(small_dual_spec(false, true), store, rng);
    Graph g(store);
    const NodeId out = model.forward(g, g.constant(random_tensor({3, 8}, rng)),
                                     g.constant(random_tensor({3, 4}, rng)));
    const NodeId loss = objectives::cross_entropy(g, out, std::vector<std::size_t>{0, 2, 1});
    g.forward_eval({}, loss);
    const auto grads = g.backward(loss);
    bool any_attr = false;
    for (num::ParamId id = 0; id < store.size(); ++id)
      if (is_attribute_param(model, id)) {
        any_attr = true;
        for (double v : grads[id].values())
          CHECK(v == 0.0);
      }
    CHECK(any_attr);
    double offset_norm = num::l2_norm(grads[model.decoder().offset_param()].values());
    CHECK(offset_norm > 0.0);
  }

  TEST_CASE("without stop_gradient the attribute encoder is updated") {
    Rng rng(8);
    ParamStore store;
    const DualAffinityModel model(small_dual_spec(true, false), store, rng);
    Graph g(store);
    const NodeId out = model.forward(g, g.constant(random_tensor({3, 8}, rng)),
                                     g.constant(random_tensor({3, 4}, rng)));
    const NodeId loss = objectives::cross_entropy(g, out, std::vector<std::size_t>{0, 2, 1});
    g.forward_eval({}, loss);
    const auto grads = g.backward(loss);
    double total = 0.0;
    for (num::ParamId id = 0; id < store.size(); ++id)
      if (is_attribute_param(model, id))
        total += num::l2_norm(grads[id].values());
    CHECK(total > 0.0);
  }

  TEST_CASE("trainable encoder with decoder blocking still gets zero through the decoder") {
    Rng rng(10);
    ParamStore store;
    const DualAffinityModel model(small_dual_spec(true, true), store, rng);
    Graph g(store);
    const NodeId out = model.forward(g, g.constant(random_tensor({2, 8}, rng)),
                                     g.constant(random_tensor({2, 4}, rng)));
    const NodeId loss = g.sum(out);
    g.forward_eval({}, loss);
    const auto grads = g.backward(loss);
    for (num::ParamId id = 0; id < store.size(); ++id)
      if (is_attribute_param(model, id))
        for (double v : grads[id].values())
          CHECK(v == 0.0);
  }

  TEST_CASE("single step with zero GRU weights goes through h1 = h0 / 2") {
    Rng rng(11);
    ParamStore store;
    const DualAffinityModel model(small_dual_spec(false, true, 1), store, rng);
    for (auto cell : {&model.decoder().forward_cell(), &model.decoder().backward_cell()})
      for (num::ParamId id : store.group(cell->group()).tensors)
        store.value(id).fill(0.0);
    const Tensor offset = random_tensor({1, 6}, rng);
    store.value(model.decoder().offset_param()) = offset;

    Graph g(store);
    const Tensor sem = random_tensor({1, 4}, rng);
    const Tensor attr = random_tensor({1, 4}, rng);
    const NodeId attr_node = g.constant(attr);
    const NodeId enc = model.encoder().encode(g, g.constant(sem), attr_node).attribute_enc;
    const NodeId out = model.forward(g, g.constant(sem), attr_node);
    const double score = g.forward_eval({}, out).item();
    const Tensor h0 = g.forward_eval({}, enc);

    std::vector<double> affinity(12);
    for (std::size_t i = 0; i < 6; ++i)
      affinity[i] = affinity[6 + i] = 0.5 * (h0[i] + offset[i]);
    const Tensor &w = store.value(model.decoder().output_weight());
    const Tensor &b = store.value(model.decoder().output_bias());
    const Tensor &hw = store.value(model.decoder().head_weight());
    const Tensor &hb = store.value(model.decoder().head_bias());
    double expect = hb[0];
    for (std::size_t j = 0; j < 5; ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < 12; ++i)
        s += affinity[i] * w.at(i, j);
      expect += s * hw.at(j, 0);
    }
    CHECK(score == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("grad_check of the full model over random seeds") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed + 300);
      ParamStore store;
      const DualAffinityModel model(small_dual_spec(true, false), store, rng);
      Graph g(store);
      const NodeId out = model.forward(g, g.constant(random_tensor({2, 8}, rng)),
                                       g.constant(random_tensor({2, 4}, rng)));
      const NodeId loss = objectives::cross_entropy(g, out, std::vector<std::size_t>{1, 2});
      const auto report = num::grad_check(g, store, {}, loss, 1e-6);
      INFO(report.to_string());
      CHECK(report.passed());
    }
  }

  TEST_CASE("optional convolutional attribute encoder") {
    Rng rng(12);
    ParamStore store;
    auto spec = small_dual_spec(true, false);
    spec.encoder.attribute_conv = Conv1dSpec{2, 3};
    const DualAffinityModel model(spec, store, rng);
    Graph g(store);
    const NodeId out = model.forward(g, g.constant(random_tensor({2, 8}, rng)),
                                     g.constant(random_tensor({2, 4}, rng)));
    const NodeId loss = g.sum(g.mul(out, g.constant(random_tensor({2, 3}, rng))));
    const auto report = num::grad_check(g, store, {}, loss, 1e-6);
    INFO(report.to_string());
    CHECK(report.passed());
  }

  TEST_CASE("spec validation") {
    auto s = small_dual_spec();
    s.decoder.hidden_size = 4;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = small_dual_spec();
    s.encoder.chunk_size = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }
}

TEST_SUITE("learners.io") {
  TEST_CASE("spec JSON round trip") {
    auto s = small_dual_spec(true, true, 2);
    s.encoder.attribute_conv = Conv1dSpec{3, 2};
    const auto j = to_json(s);
    const auto back = dual_affinity_spec_from_json(j);
    CHECK(to_json(back) == j);
    CHECK_THROWS_AS(mlp_spec_from_json(nlohmann::json{{"layer_widths", "x"}}), ValidationError);
  }

  TEST_CASE("checkpoint round trip is exact") {
    Rng rng(13);
    ParamStore store;
    const Mlp mlp(MlpSpec{{3, 4, 2}, Activation::Tanh}, store, "mlp", rng);
    const auto stem = std::filesystem::temp_directory_path() / "gremetl_ckpt_test";
    save_checkpoint(store, stem);
    ParamStore other;
    Rng rng2(99);
    const Mlp mlp2(MlpSpec{{3, 4, 2}, Activation::Tanh}, other, "mlp", rng2);
    load_checkpoint(other, stem);
    for (num::ParamId id = 0; id < store.size(); ++id)
      CHECK(other.value(id) == store.value(id));

    ParamStore wrong;
    Rng rng3(1);
    const Mlp mlp3(MlpSpec{{3, 5, 2}, Activation::Tanh}, wrong, "mlp", rng3);
    CHECK_THROWS(load_checkpoint(wrong, stem));
  }
}
