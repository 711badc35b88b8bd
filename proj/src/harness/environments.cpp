// SPDX-License-Identifier: Apache-2.0
#include "harness/environments.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "learners/dual_affinity.hpp"
#include "learners/mlp.hpp"
#include "numcore/graph.hpp"
#include "numcore/rng.hpp"
#include "objectives/losses.hpp"
#include "objectives/metrics.hpp"

namespace gremetl::harness {

namespace {

using meta::EvalMetrics;
using meta::Split;

enum Stream : std::uint64_t { Combo = 11 };

num::Tensor rows_of(const episodes::Points &points, const std::vector<std::size_t> &ids) {
  const std::size_t d = points.at(ids.front()).size();
  num::Tensor t({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r)
    for (std::size_t c = 0; c < d; ++c)
      t.at(r, c) = points[ids[r]][c];
  return t;
}

std::size_t argmax_row(const num::Tensor &t, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.cols(); ++c)
    if (t.at(r, c) > t.at(r, best))
      best = c;
  return best;
}

void require_finite(double v, const char *what) {
  if (!std::isfinite(v))
    throw NumericError(std::string("non-finite ") + what);
}

// ------------------------------------------------------------------ quadratic

class QuadraticLearner : public meta::Learner {
 public:
  QuadraticLearner(const std::vector<episodes::QuadraticTask> &tasks,
                   const episodes::MetaSet &set)
    : tasks_(tasks), set_(set) {
    const std::size_t d = tasks.front().minimum.size();
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t g = store_.add_group("theta" + std::to_string(i));
      store_.add(g, "theta" + std::to_string(i), num::Tensor({1}, 0.0));
    }
  }

  num::ParamStore &params() override { return store_; }
  std::size_t batch_count() const override { return set_.d_train.size(); }

  std::pair<double, num::Gradients> loss_and_gradients(std::size_t batch) override {
    const auto theta = current();
    double loss = 0.0;
    std::vector<double> grad(theta.size(), 0.0);
    const auto &ids = set_.d_train.at(batch);
    for (std::size_t t : ids) {
      loss += tasks_[t].loss(theta);
      const auto g = tasks_[t].gradient(theta);
      for (std::size_t i = 0; i < g.size(); ++i)
        grad[i] += g[i];
    }
    const double n = static_cast<double>(ids.size());
    require_finite(loss, "training loss");
    num::Gradients out;
    for (double g : grad)
      out.push_back(num::Tensor({1}, g / n));
    return {loss / n, out};
  }

  EvalMetrics evaluate(Split split) override {
    const auto &ids = split == Split::Heldout ? set_.d_heldout : set_.d_test;
    const auto theta = current();
    double loss = 0.0;
    for (std::size_t t : ids)
      loss += tasks_[t].loss(theta);
    loss /= static_cast<double>(ids.size());
    require_finite(loss, "evaluation loss");
    EvalMetrics m;
    m.loss = loss;
    m.reward = 1.0 / (1.0 + loss);
    return m;
  }

 private:
  std::vector<double> current() const {
    std::vector<double> theta;
    for (num::ParamId p = 0; p < store_.size(); ++p)
      theta.push_back(store_.value(p).item());
    return theta;
  }

  const std::vector<episodes::QuadraticTask> &tasks_;
  const episodes::MetaSet &set_;
  num::ParamStore store_;
};

class QuadraticEnvironment : public meta::TaskEnvironment {
 public:
  QuadraticEnvironment(const std::vector<episodes::QuadraticTask> &tasks,
                       episodes::MetaSet set)
    : tasks_(tasks), set_(std::move(set)) {}

  std::size_t group_count() const override { return tasks_.front().minimum.size(); }
  std::vector<std::string> group_names() const override {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < group_count(); ++i)
      n.push_back("theta" + std::to_string(i));
    return n;
  }
  std::unique_ptr<meta::Learner> make_learner(const meta::HyperChoice &,
                                              std::uint64_t) const override {
    return std::make_unique<QuadraticLearner>(tasks_, set_);
  }

 private:
  const std::vector<episodes::QuadraticTask> &tasks_;
  episodes::MetaSet set_;
};

// ------------------------------------------------------------ graph learners

/// A learner whose loss and evaluation graphs are built once per split and
/// re-evaluated against the current parameters.
class GraphLearner : public meta::Learner {
 public:
  num::ParamStore &params() override { return store_; }
  std::size_t batch_count() const override { return train_.size(); }

  std::pair<double, num::Gradients> loss_and_gradients(std::size_t batch) override {
    Built &b = train_.at(batch);
    const double loss = b.graph->forward_eval({}, b.loss).item();
    return {loss, b.graph->backward(b.loss)};
  }

 protected:
  struct Built {
    std::unique_ptr<num::Graph> graph;
    num::NodeId output = 0;
    num::NodeId loss = 0;
  };

  num::ParamStore store_;
  std::vector<Built> train_;
  Built heldout_;
  Built test_;
};

std::vector<std::size_t> hidden_widths(const LearnerConfig &l, std::size_t width) {
  return std::vector<std::size_t>(l.hidden_layers, width);
}

class ClassificationLearner : public GraphLearner {
 public:
  ClassificationLearner(const ExperimentConfig &cfg, const TaskData &data,
                        const episodes::MetaSet &set,
                        const std::vector<std::size_t> &local_label,
                        const meta::HyperChoice &hyper, std::uint64_t init_seed) {
    num::Rng rng(init_seed);
    const std::size_t classes = set.n;
    const bool dual = cfg.learner.kind == LearnerKind::DualAffinity;
    if (dual) {
      learners::DualAffinitySpec spec;
      auto &enc = spec.encoder;
      enc.chunk_size = cfg.learner.chunk_size;
      enc.attribute_trainable = cfg.learner.attribute_trainable;
      enc.attribute_conv = cfg.learner.attribute_conv;
      enc.semantic_encoder.activation = cfg.learner.activation;
      enc.semantic_encoder.layer_widths = {enc.chunk_size};
      for (std::size_t w : hidden_widths(cfg.learner, hyper.width))
        enc.semantic_encoder.layer_widths.push_back(w);
      enc.semantic_encoder.layer_widths.push_back(hyper.width);
      enc.attribute_encoder.activation = cfg.learner.activation;
      enc.attribute_encoder.layer_widths = {cfg.task.synthetic.attribute_dimension};
      for (std::size_t w : hidden_widths(cfg.learner, hyper.width))
        enc.attribute_encoder.layer_widths.push_back(w);
      enc.attribute_encoder.layer_widths.push_back(cfg.learner.decoder_hidden);
      spec.decoder.hidden_size = cfg.learner.decoder_hidden;
      spec.decoder.output_width = cfg.learner.decoder_output;
      spec.decoder.head_outputs = classes;
      dual_ = std::make_unique<learners::DualAffinityModel>(spec, store_, rng);
    } else {
      learners::MlpSpec spec;
      spec.activation = cfg.learner.activation;
      spec.layer_widths = {data.family.blobs.features.front().size()};
      for (std::size_t w : hidden_widths(cfg.learner, hyper.width))
        spec.layer_widths.push_back(w);
      spec.layer_widths.push_back(classes);
      mlp_ = std::make_unique<learners::Mlp>(spec, store_, "mlp", rng);
    }

    auto build = [&](const std::vector<std::size_t> &ids, std::vector<std::size_t> &labels) {
      Built b;
      b.graph = std::make_unique<num::Graph>(store_);
      labels.clear();
      for (std::size_t u : ids)
        labels.push_back(local_label.at(data.unit_domain[u]));
      num::Graph &g = *b.graph;
      if (dual) {
        const auto &p = data.family.paired;
        const num::NodeId s = g.constant(rows_of(p.semantic, ids), "semantic");
        const num::NodeId a = g.constant(rows_of(p.attributes, ids), "attributes");
        b.output = dual_->forward(g, s, a);
      } else {
        const num::NodeId x = g.constant(rows_of(data.family.blobs.features, ids), "x");
        b.output = mlp_->forward(g, x);
      }
      b.loss = objectives::cross_entropy(g, b.output, labels);
      return b;
    };
    std::vector<std::size_t> scratch;
    for (const auto &batch : set.d_train)
      train_.push_back(build(batch, scratch));
    heldout_ = build(set.d_heldout, heldout_labels_);
    test_ = build(set.d_test, test_labels_);
  }

  EvalMetrics evaluate(Split split) override {
    Built &b = split == Split::Heldout ? heldout_ : test_;
    const auto &labels = split == Split::Heldout ? heldout_labels_ : test_labels_;
    EvalMetrics m;
    m.loss = b.graph->forward_eval({}, b.loss).item();
    const num::Tensor &logits = b.graph->value(b.output);
    std::vector<std::size_t> pred(logits.rows());
    for (std::size_t r = 0; r < pred.size(); ++r)
      pred[r] = argmax_row(logits, r);
    m.accuracy = objectives::top1_accuracy(pred, labels);
    m.reward = *m.accuracy;
    return m;
  }

 private:
  std::unique_ptr<learners::Mlp> mlp_;
  std::unique_ptr<learners::DualAffinityModel> dual_;
  std::vector<std::size_t> heldout_labels_;
  std::vector<std::size_t> test_labels_;
};

class ClassificationEnvironment : public meta::TaskEnvironment {
 public:
  ClassificationEnvironment(const ExperimentConfig &cfg, const TaskData &data,
                            episodes::MetaSet set)
    : cfg_(cfg), data_(data), set_(std::move(set)) {
    std::size_t max_domain = 0;
    for (std::size_t d : data_.unit_domain)
      max_domain = std::max(max_domain, d);
    local_label_.assign(max_domain + 1, 0);
    for (std::size_t i = 0; i < set_.train_domains.size(); ++i)
      local_label_[set_.train_domains[i]] = i;
    groups_ = make_learner({cfg.meta_policy.lr_grid.front(), 1.0,
                            cfg.meta_policy.width_grid.front()},
                           0)
                ->params()
                .groups()
                .size();
  }

  std::size_t group_count() const override { return groups_; }
  std::vector<std::string> group_names() const override {
    auto l = make_learner({cfg_.meta_policy.lr_grid.front(), 1.0,
                           cfg_.meta_policy.width_grid.front()},
                          0);
    std::vector<std::string> n;
    for (const auto &g : l->params().groups())
      n.push_back(g.name);
    return n;
  }
  std::unique_ptr<meta::Learner> make_learner(const meta::HyperChoice &hyper,
                                              std::uint64_t init_seed) const override {
    return std::make_unique<ClassificationLearner>(cfg_, data_, set_, local_label_, hyper,
                                                   init_seed);
  }

 private:
  const ExperimentConfig &cfg_;
  const TaskData &data_;
  episodes::MetaSet set_;
  std::vector<std::size_t> local_label_;
  std::size_t groups_ = 0;
};

// -------------------------------------------------------------------- ranking

class RankingLearner : public GraphLearner {
 public:
  RankingLearner(const ExperimentConfig &cfg, const TaskData &data,
                 const episodes::MetaSet &set, const meta::HyperChoice &hyper,
                 std::uint64_t init_seed)
    : data_(data) {
    num::Rng rng(init_seed);
    learners::MlpSpec spec;
    spec.activation = cfg.learner.activation;
    spec.layer_widths = {data.records.front().features.size()};
    for (std::size_t w : hidden_widths(cfg.learner, hyper.width))
      spec.layer_widths.push_back(w);
    spec.layer_widths.push_back(1);
    mlp_ = learners::Mlp(spec, store_, "scorer", rng);

    for (const auto &batch : set.d_train) {
      Split_ s;
      train_.push_back(build(batch, s));
    }
    heldout_ = build(set.d_heldout, heldout_split_);
    test_ = build(set.d_test, test_split_);
  }

  EvalMetrics evaluate(Split split) override {
    Built &b = split == Split::Heldout ? heldout_ : test_;
    const Split_ &s = split == Split::Heldout ? heldout_split_ : test_split_;
    EvalMetrics m;
    m.loss = b.graph->forward_eval({}, b.loss).item();
    const num::Tensor &scores = b.graph->value(b.output);
    double n1 = 0.0, n5 = 0.0;
    for (std::size_t q = 0; q + 1 < s.offsets.size(); ++q) {
      objectives::RankedList list;
      for (std::size_t r = s.offsets[q]; r < s.offsets[q + 1]; ++r)
        list.items.push_back({scores[r], s.grades[r]});
      n1 += objectives::ndcg_at_k(list, 1);
      n5 += objectives::ndcg_at_k(list, 5);
    }
    const double nq = static_cast<double>(s.offsets.size() - 1);
    m.ndcg1 = n1 / nq;
    m.ndcg5 = n5 / nq;
    m.reward = *m.ndcg5;
    return m;
  }

 private:
  struct Split_ {
    std::vector<int> grades;
    std::vector<std::int64_t> groups;
    std::vector<std::size_t> offsets;
  };

  Built build(const std::vector<std::size_t> &queries, Split_ &s) {
    std::vector<std::size_t> docs;
    s.offsets = {0};
    for (std::size_t q : queries) {
      const auto &group = data_.queries.at(q);
      for (std::size_t r : group.records) {
        docs.push_back(r);
        s.grades.push_back(data_.records[r].relevance);
        s.groups.push_back(group.qid);
      }
      s.offsets.push_back(docs.size());
    }
    num::Tensor x({docs.size(), data_.records.front().features.size()});
    for (std::size_t i = 0; i < docs.size(); ++i)
      for (std::size_t c = 0; c < x.cols(); ++c)
        x.at(i, c) = data_.records[docs[i]].features[c];
    Built b;
    b.graph = std::make_unique<num::Graph>(store_);
    num::Graph &g = *b.graph;
    b.output = mlp_.forward(g, g.constant(std::move(x), "documents"));
    b.loss = objectives::pairwise_rank_loss(g, b.output, s.grades, s.groups).loss;
    return b;
  }

  const TaskData &data_;
  learners::Mlp mlp_;
  Split_ heldout_split_;
  Split_ test_split_;
};

class RankingEnvironment : public meta::TaskEnvironment {
 public:
  RankingEnvironment(const ExperimentConfig &cfg, const TaskData &data,
                     episodes::MetaSet set)
    : cfg_(cfg), data_(data), set_(std::move(set)) {}

  std::size_t group_count() const override { return cfg_.learner.hidden_layers + 1; }
  std::vector<std::string> group_names() const override {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < group_count(); ++i)
      n.push_back("scorer.layer" + std::to_string(i));
    return n;
  }
  std::unique_ptr<meta::Learner> make_learner(const meta::HyperChoice &hyper,
                                              std::uint64_t init_seed) const override {
    return std::make_unique<RankingLearner>(cfg_, data_, set_, hyper, init_seed);
  }

 private:
  const ExperimentConfig &cfg_;
  const TaskData &data_;
  episodes::MetaSet set_;
};

bool is_quadratic(const ExperimentConfig &c) {
  return c.task.source == TaskSource::Synthetic &&
         c.task.synthetic.kind == episodes::FamilyKind::QuadraticBowl;
}

std::uint64_t task_seed(const ExperimentConfig &c) {
  switch (c.task.source) {
  case TaskSource::Synthetic:
    return c.task.synthetic.seed;
  case TaskSource::SyntheticLetor:
    return c.task.letor_fixture.seed;
  case TaskSource::Letor:
    return c.task.domains.seed;
  }
  return 0;
}

} // namespace

TaskData load_task_data(const ExperimentConfig &config) {
  TaskData data;
  data.source = config.task.source;
  if (config.task.source == TaskSource::Synthetic) {
    data.family = episodes::synth_tasks(config.task.synthetic, config.task.n_tasks);
    if (config.task.synthetic.kind == episodes::FamilyKind::GaussianBlobs)
      data.unit_domain = data.family.blobs.labels;
    else if (config.task.synthetic.kind == episodes::FamilyKind::TwoGroupAttributes)
      data.unit_domain = data.family.paired.labels;
    return data;
  }
  if (config.task.source == TaskSource::Letor) {
    episodes::LetorParseOptions opts;
    opts.max_grade = config.task.max_grade;
    data.records = episodes::parse_letor_file(config.task.letor_path, opts);
  } else {
    data.records = episodes::synthetic_letor(config.task.letor_fixture);
  }
  if (data.records.empty())
    throw DegenerateDataError("LETOR input has no records");
  if (data.records.front().features.empty())
    throw DegenerateDataError("LETOR input has no features");
  data.queries = episodes::group_by_query(data.records);
  const auto points = episodes::query_mean_features(data.records, data.queries);
  data.partition = episodes::build_domains(points, config.task.domains);
  data.unit_domain = data.partition->domain;
  return data;
}

episodes::MetaSet make_combo_meta_set(const ExperimentConfig &config,
                                      const TaskData &data, std::size_t combo) {
  const std::uint64_t seed = num::derive_seed(task_seed(config), {Combo, combo});
  if (is_quadratic(config))
    return episodes::split_tasks(data.family.quadratic.size(),
                                 config.episodes.train_tasks,
                                 config.episodes.heldout_tasks,
                                 config.episodes.test_tasks, seed);
  return episodes::make_meta_set(data.unit_domain, config.episodes.meta_set, seed);
}

std::unique_ptr<meta::TaskEnvironment>
make_environment(const ExperimentConfig &config, const TaskData &data,
                 const episodes::MetaSet &set) {
  if (is_quadratic(config))
    return std::make_unique<QuadraticEnvironment>(data.family.quadratic, set);
  if (config.task.source == TaskSource::Synthetic)
    return std::make_unique<ClassificationEnvironment>(config, data, set);
  return std::make_unique<RankingEnvironment>(config, data, set);
}

std::string reward_metric_name(const ExperimentConfig &config) {
  if (is_quadratic(config))
    return "inverse_loss";
  if (config.task.source == TaskSource::Synthetic)
    return "accuracy";
  return "ndcg@5";
}

} // namespace gremetl::harness
