// SPDX-License-Identifier: Apache-2.0
#include "harness/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "common/error.hpp"

namespace gremetl::harness {

namespace {

using nlohmann::json;

class Obj {
 public:
  Obj(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string &key) const { return j_.contains(key); }

  std::string at(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json *get(const std::string &key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string &key, double def) {
    const json *v = get(key);
    if (!v)
      return def;
    if (!v->is_number())
      throw ValidationError(at(key), "expected a number");
    return v->get<double>();
  }

  std::uint64_t u64(const std::string &key, std::uint64_t def) {
    const json *v = get(key);
    if (!v)
      return def;
    return to_u64(*v, at(key));
  }

  std::size_t size(const std::string &key, std::size_t def) {
    return static_cast<std::size_t>(u64(key, def));
  }

  int integer(const std::string &key, int def) {
    const json *v = get(key);
    if (!v)
      return def;
    if (!v->is_number_integer())
      throw ValidationError(at(key), "expected an integer");
    return v->get<int>();
  }

  bool boolean(const std::string &key, bool def) {
    const json *v = get(key);
    if (!v)
      return def;
    if (!v->is_boolean())
      throw ValidationError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string &key, const std::string &def) {
    const json *v = get(key);
    if (!v)
      return def;
    if (!v->is_string())
      throw ValidationError(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string &key, std::vector<double> def) {
    const json *v = get(key);
    if (!v)
      return def;
    if (!v->is_array())
      throw ValidationError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number())
        throw ValidationError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  std::vector<std::uint64_t> u64s(const std::string &key, std::vector<std::uint64_t> def) {
    const json *v = get(key);
    if (!v)
      return def;
    if (!v->is_array())
      throw ValidationError(at(key), "expected an array of non-negative integers");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v->size(); ++i)
      out.push_back(to_u64((*v)[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  Obj sub(const std::string &key) {
    static const json empty = json::object();
    const json *v = get(key);
    return Obj(v ? *v : empty, at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ValidationError(at(it.key()), "unknown key");
  }

 private:
  static std::uint64_t to_u64(const json &v, const std::string &path) {
    const bool ok = v.is_number_unsigned() ||
                    (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!ok)
      throw ValidationError(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

TaskSource parse_source(const std::string &s) {
  if (s == "synthetic")
    return TaskSource::Synthetic;
  if (s == "letor")
    return TaskSource::Letor;
  if (s == "synthetic_letor")
    return TaskSource::SyntheticLetor;
  throw ValidationError("task.source", "unknown source '" + s +
                                         "' (expected synthetic, letor or synthetic_letor)");
}

LearnerKind parse_learner(const std::string &s) {
  if (s == "direct")
    return LearnerKind::Direct;
  if (s == "mlp")
    return LearnerKind::Mlp;
  if (s == "dual_affinity")
    return LearnerKind::DualAffinity;
  throw ValidationError("learner.kind", "unknown learner '" + s +
                                          "' (expected direct, mlp or dual_affinity)");
}

LearnerKind default_learner(const TaskConfig &t) {
  if (t.source != TaskSource::Synthetic)
    return LearnerKind::Mlp;
  switch (t.synthetic.kind) {
  case episodes::FamilyKind::QuadraticBowl:
    return LearnerKind::Direct;
  case episodes::FamilyKind::GaussianBlobs:
    return LearnerKind::Mlp;
  case episodes::FamilyKind::TwoGroupAttributes:
    return LearnerKind::DualAffinity;
  }
  return LearnerKind::Mlp;
}

TaskConfig parse_task(Obj o) {
  TaskConfig t;
  t.source = parse_source(o.string("source", "synthetic"));
  switch (t.source) {
  case TaskSource::Synthetic: {
    auto &s = t.synthetic;
    s.kind = episodes::parse_family(o.string("family", "quadratic_bowl"));
    s.dimension = o.size("dimension", s.dimension);
    s.noise = o.number("noise", s.noise);
    s.seed = o.u64("seed", s.seed);
    t.n_tasks = o.size("n_tasks", t.n_tasks);
    if (s.kind == episodes::FamilyKind::QuadraticBowl) {
      s.curvature_min = o.number("curvature_min", s.curvature_min);
      s.curvature_max = o.number("curvature_max", s.curvature_max);
      s.curvature_jitter = o.number("curvature_jitter", s.curvature_jitter);
      s.center_scale = o.number("center_scale", s.center_scale);
    } else {
      s.points_per_class = o.size("points_per_class", s.points_per_class);
      s.separation = o.number("separation", s.separation);
      if (s.kind == episodes::FamilyKind::TwoGroupAttributes)
        s.attribute_dimension = o.size("attribute_dimension", s.attribute_dimension);
    }
    break;
  }
  case TaskSource::Letor:
    t.letor_path = o.string("path", "");
    if (o.has("max_grade"))
      t.max_grade = o.integer("max_grade", 0);
    break;
  case TaskSource::SyntheticLetor: {
    auto &f = t.letor_fixture;
    f.clusters = o.size("clusters", f.clusters);
    f.queries_per_cluster = o.size("queries_per_cluster", f.queries_per_cluster);
    f.docs_per_query = o.size("docs_per_query", f.docs_per_query);
    f.dimension = o.size("dimension", f.dimension);
    f.separation = o.number("separation", f.separation);
    f.seed = o.u64("seed", f.seed);
    break;
  }
  }
  if (t.source != TaskSource::Synthetic) {
    Obj d = o.sub("domains");
    t.domains.k = d.size("k", t.domains.k);
    t.domains.threshold = d.number("threshold", t.domains.threshold);
    t.domains.restarts = d.size("restarts", t.domains.restarts);
    t.domains.seed = d.u64("seed", t.domains.seed);
    t.domains.scan_min = d.size("scan_min", t.domains.scan_min);
    t.domains.scan_max = d.size("scan_max", t.domains.scan_max);
    d.finish();
  }
  o.finish();
  return t;
}

LearnerConfig parse_learner_block(Obj o, const TaskConfig &task) {
  LearnerConfig l;
  l.kind = o.has("kind") ? parse_learner(o.string("kind", "")) : default_learner(task);
  if (l.kind != LearnerKind::Direct) {
    const std::string act = o.string("activation", "tanh");
    if (act != "tanh" && act != "sigmoid")
      throw ValidationError("learner.activation", "expected 'sigmoid' or 'tanh', got '" +
                                                    act + "'");
    l.activation = learners::parse_activation(act);
    l.hidden_layers = o.size("hidden_layers", l.hidden_layers);
  }
  if (l.kind == LearnerKind::DualAffinity) {
    l.chunk_size = o.size("chunk_size", l.chunk_size);
    l.attribute_trainable = o.boolean("attribute_trainable", l.attribute_trainable);
    l.decoder_hidden = o.size("decoder_hidden", l.decoder_hidden);
    l.decoder_output = o.size("decoder_output", l.decoder_output);
    if (o.has("attribute_conv")) {
      Obj c = o.sub("attribute_conv");
      learners::Conv1dSpec spec;
      spec.kernel = c.size("kernel", spec.kernel);
      spec.channels = c.size("channels", spec.channels);
      c.finish();
      l.attribute_conv = spec;
    }
  }
  o.finish();
  return l;
}

EpisodeConfig parse_episodes(Obj o, const TaskConfig &task) {
  EpisodeConfig e;
  auto &m = e.meta_set;
  if (task.source == TaskSource::Synthetic &&
      task.synthetic.kind == episodes::FamilyKind::QuadraticBowl) {
    e.train_tasks = o.size("train_tasks", e.train_tasks);
    e.heldout_tasks = o.size("heldout_tasks", e.heldout_tasks);
    e.test_tasks = o.size("test_tasks", e.test_tasks);
    o.finish();
    return e;
  }
  const bool ranking = task.source != TaskSource::Synthetic;
  const std::string layout = o.string("layout", ranking ? "disjoint" : "shared");
  if (layout == "shared")
    m.layout = episodes::SplitLayout::SharedDomains;
  else if (layout == "disjoint")
    m.layout = episodes::SplitLayout::DisjointDomains;
  else
    throw ValidationError("episodes.layout", "expected shared or disjoint");
  m.counts.train_shots = o.size("k", m.counts.train_shots);
  m.counts.heldout = o.size("heldout", m.counts.heldout);
  m.counts.test = o.size("test", m.counts.test);
  m.n_batches = o.size("n_batches", m.n_batches);
  if (m.layout == episodes::SplitLayout::SharedDomains) {
    m.n_domains = o.size("N", m.n_domains);
  } else {
    m.train_domains = o.size("train_domains", m.train_domains);
    m.heldout_domains = o.size("heldout_domains", m.heldout_domains);
    m.test_domains = o.size("test_domains", m.test_domains);
  }
  o.finish();
  return e;
}

meta::MetaTrainConfig parse_meta(Obj o) {
  meta::MetaTrainConfig c;
  c.lambda_grid = o.numbers("lambda_grid", c.lambda_grid);
  c.lr_grid = o.numbers("lr_grid", c.lr_grid);
  c.decay_grid = o.numbers("decay_grid", c.decay_grid);
  std::vector<std::uint64_t> widths(c.width_grid.begin(), c.width_grid.end());
  widths = o.u64s("width_grid", widths);
  c.width_grid.assign(widths.begin(), widths.end());
  c.p_explore = o.number("p_explore", c.p_explore);
  c.meta_epochs = o.size("meta_epochs", c.meta_epochs);
  c.baseline_enabled = o.boolean("baseline_enabled", c.baseline_enabled);
  c.seed = o.u64("seed", c.seed);
  c.meta_lr = o.number("meta_lr", c.meta_lr);
  c.learner_epochs = o.size("learner_epochs", c.learner_epochs);
  c.baseline_decay = o.number("baseline_decay", c.baseline_decay);
  c.policy_init_scale = o.number("policy_init_scale", c.policy_init_scale);
  o.finish();
  return c;
}

void prefix_rethrow(const std::string &prefix, const ValidationError &e) {
  const std::string &p = e.field_path();
  if (p.rfind(prefix, 0) == 0)
    throw e;
  const std::string msg = e.what();
  const auto colon = msg.find(": ");
  throw ValidationError(prefix + "." + p,
                        colon == std::string::npos ? msg : msg.substr(colon + 2));
}

} // namespace

std::string source_name(TaskSource s) {
  switch (s) {
  case TaskSource::Synthetic:
    return "synthetic";
  case TaskSource::Letor:
    return "letor";
  case TaskSource::SyntheticLetor:
    return "synthetic_letor";
  }
  return "unknown";
}

std::string learner_name(LearnerKind k) {
  switch (k) {
  case LearnerKind::Direct:
    return "direct";
  case LearnerKind::Mlp:
    return "mlp";
  case LearnerKind::DualAffinity:
    return "dual_affinity";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (seeds.empty())
    throw ValidationError("seeds", "must list at least one seed");
  if (combos == 0)
    throw ValidationError("combos", "must be at least 1");
  if (output_dir.empty())
    throw ValidationError("output_dir", "must not be empty");
  try {
    meta_policy.validate();
  } catch (const ValidationError &e) {
    prefix_rethrow("meta_policy", e);
  }

  const bool quadratic = task.source == TaskSource::Synthetic &&
                         task.synthetic.kind == episodes::FamilyKind::QuadraticBowl;
  switch (task.source) {
  case TaskSource::Synthetic:
    try {
      task.synthetic.validate();
    } catch (const ValidationError &e) {
      prefix_rethrow("task", e);
    }
    if (task.n_tasks < 2)
      throw ValidationError("task.n_tasks", "must be at least 2");
    break;
  case TaskSource::Letor:
    if (task.letor_path.empty())
      throw ValidationError("task.path", "a LETOR file path is required");
    if (!std::filesystem::is_regular_file(task.letor_path))
      throw ValidationError("task.path", "file '" + task.letor_path + "' does not exist");
    break;
  case TaskSource::SyntheticLetor:
    if (task.letor_fixture.clusters < 2)
      throw ValidationError("task.clusters", "must be at least 2");
    if (task.letor_fixture.docs_per_query < 2)
      throw ValidationError("task.docs_per_query", "must be at least 2");
    if (task.letor_fixture.queries_per_cluster == 0 || task.letor_fixture.dimension == 0)
      throw ValidationError("task", "fixture sizes must be positive");
    break;
  }
  if (task.source != TaskSource::Synthetic) {
    if (task.domains.k < 2)
      throw ValidationError("task.domains.k", "must be at least 2");
    if (task.domains.restarts == 0)
      throw ValidationError("task.domains.restarts", "must be at least 1");
    if (!(task.domains.threshold >= -1.0 && task.domains.threshold <= 1.0))
      throw ValidationError("task.domains.threshold", "must lie in [-1, 1]");
  }

  if (quadratic && learner.kind != LearnerKind::Direct)
    throw ValidationError("learner.kind", "quadratic_bowl tasks use the direct learner");
  if (!quadratic && learner.kind == LearnerKind::Direct)
    throw ValidationError("learner.kind", "the direct learner only fits quadratic_bowl");
  if (learner.kind == LearnerKind::DualAffinity &&
      !(task.source == TaskSource::Synthetic &&
        task.synthetic.kind == episodes::FamilyKind::TwoGroupAttributes))
    throw ValidationError("learner.kind", "dual_affinity needs two_group_attributes data");
  if (task.source == TaskSource::Synthetic &&
      task.synthetic.kind == episodes::FamilyKind::TwoGroupAttributes &&
      learner.kind != LearnerKind::DualAffinity)
    throw ValidationError("learner.kind", "two_group_attributes data needs dual_affinity");
  if (learner.kind != LearnerKind::Direct && learner.hidden_layers == 0)
    throw ValidationError("learner.hidden_layers", "must be at least 1");
  if (learner.kind == LearnerKind::DualAffinity) {
    if (learner.chunk_size == 0 || task.synthetic.dimension % learner.chunk_size != 0)
      throw ValidationError("learner.chunk_size",
                            "must divide the semantic dimension " +
                              std::to_string(task.synthetic.dimension));
    if (learner.decoder_hidden == 0 || learner.decoder_output == 0)
      throw ValidationError("learner", "decoder sizes must be positive");
    if (learner.attribute_conv &&
        (learner.attribute_conv->kernel == 0 || learner.attribute_conv->channels == 0 ||
         learner.attribute_conv->kernel > task.synthetic.attribute_dimension))
      throw ValidationError("learner.attribute_conv",
                            "kernel must lie in [1, attribute_dimension] and channels > 0");
  }

  if (quadratic) {
    if (episodes.train_tasks == 0 || episodes.heldout_tasks == 0 || episodes.test_tasks == 0)
      throw ValidationError("episodes", "task split counts must be positive");
    if (episodes.train_tasks + episodes.heldout_tasks + episodes.test_tasks > task.n_tasks)
      throw ValidationError("episodes", "train + heldout + test tasks exceed task.n_tasks");
  } else {
    episodes.meta_set.validate();
    if (task.source == TaskSource::Synthetic &&
        episodes.meta_set.layout != episodes::SplitLayout::SharedDomains)
      throw ValidationError("episodes.layout",
                            "classification episodes need the shared layout");
    if (task.source == TaskSource::Synthetic && episodes.meta_set.n_domains < 2)
      throw ValidationError("episodes.N", "classification episodes need at least 2 classes");
  }
}

ExperimentConfig config_from_json(const nlohmann::json &j) {
  try {
    Obj root(j, "");
    const int version = root.integer("format_version", kFormatVersion);
    if (version != kFormatVersion)
      throw ValidationError("format_version", "unsupported version " + std::to_string(version));
    ExperimentConfig c;
    c.label = root.string("label", "");
    c.task = parse_task(root.sub("task"));
    c.learner = parse_learner_block(root.sub("learner"), c.task);
    c.episodes = parse_episodes(root.sub("episodes"), c.task);
    c.meta_policy = parse_meta(root.sub("meta_policy"));
    c.combos = root.size("combos", c.combos);
    c.seeds = root.u64s("seeds", {c.meta_policy.seed});
    c.output_dir = root.string("output_dir", c.output_dir);
    root.finish();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("<root>", e.what());
  }
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error &e) {
    throw ValidationError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig &c) {
  json task = {{"source", source_name(c.task.source)}};
  switch (c.task.source) {
  case TaskSource::Synthetic: {
    const auto &s = c.task.synthetic;
    task["family"] = episodes::family_name(s.kind);
    task["dimension"] = s.dimension;
    task["noise"] = s.noise;
    task["seed"] = s.seed;
    task["n_tasks"] = c.task.n_tasks;
    if (s.kind == episodes::FamilyKind::QuadraticBowl) {
      task["curvature_min"] = s.curvature_min;
      task["curvature_max"] = s.curvature_max;
      task["curvature_jitter"] = s.curvature_jitter;
      task["center_scale"] = s.center_scale;
    } else {
      task["points_per_class"] = s.points_per_class;
      task["separation"] = s.separation;
      if (s.kind == episodes::FamilyKind::TwoGroupAttributes)
        task["attribute_dimension"] = s.attribute_dimension;
    }
    break;
  }
  case TaskSource::Letor:
    task["path"] = c.task.letor_path;
    if (c.task.max_grade)
      task["max_grade"] = *c.task.max_grade;
    break;
  case TaskSource::SyntheticLetor: {
    const auto &f = c.task.letor_fixture;
    task["clusters"] = f.clusters;
    task["queries_per_cluster"] = f.queries_per_cluster;
    task["docs_per_query"] = f.docs_per_query;
    task["dimension"] = f.dimension;
    task["separation"] = f.separation;
    task["seed"] = f.seed;
    break;
  }
  }
  if (c.task.source != TaskSource::Synthetic) {
    const auto &d = c.task.domains;
    task["domains"] = {{"k", d.k},
                       {"threshold", d.threshold},
                       {"restarts", d.restarts},
                       {"seed", d.seed},
                       {"scan_min", d.scan_min},
                       {"scan_max", d.scan_max}};
  }

  json learner = {{"kind", learner_name(c.learner.kind)}};
  if (c.learner.kind != LearnerKind::Direct) {
    learner["activation"] = learners::activation_name(c.learner.activation);
    learner["hidden_layers"] = c.learner.hidden_layers;
  }
  if (c.learner.kind == LearnerKind::DualAffinity) {
    learner["chunk_size"] = c.learner.chunk_size;
    learner["attribute_trainable"] = c.learner.attribute_trainable;
    learner["decoder_hidden"] = c.learner.decoder_hidden;
    learner["decoder_output"] = c.learner.decoder_output;
    if (c.learner.attribute_conv)
      learner["attribute_conv"] = {{"kernel", c.learner.attribute_conv->kernel},
                                   {"channels", c.learner.attribute_conv->channels}};
  }

  json eps = json::object();
  const bool quadratic = c.task.source == TaskSource::Synthetic &&
                         c.task.synthetic.kind == episodes::FamilyKind::QuadraticBowl;
  if (quadratic) {
    eps = {{"train_tasks", c.episodes.train_tasks},
           {"heldout_tasks", c.episodes.heldout_tasks},
           {"test_tasks", c.episodes.test_tasks}};
  } else {
    const auto &m = c.episodes.meta_set;
    const bool shared = m.layout == episodes::SplitLayout::SharedDomains;
    eps = {{"layout", shared ? "shared" : "disjoint"},
           {"k", m.counts.train_shots},
           {"heldout", m.counts.heldout},
           {"test", m.counts.test},
           {"n_batches", m.n_batches}};
    if (shared) {
      eps["N"] = m.n_domains;
    } else {
      eps["train_domains"] = m.train_domains;
      eps["heldout_domains"] = m.heldout_domains;
      eps["test_domains"] = m.test_domains;
    }
  }

  const auto &m = c.meta_policy;
  json meta = {{"lambda_grid", m.lambda_grid},
               {"lr_grid", m.lr_grid},
               {"decay_grid", m.decay_grid},
               {"width_grid", m.width_grid},
               {"p_explore", m.p_explore},
               {"meta_epochs", m.meta_epochs},
               {"baseline_enabled", m.baseline_enabled},
               {"seed", m.seed},
               {"meta_lr", m.meta_lr},
               {"learner_epochs", m.learner_epochs},
               {"baseline_decay", m.baseline_decay},
               {"policy_init_scale", m.policy_init_scale}};

  return {{"format_version", kFormatVersion},
          {"label", c.label},
          {"task", task},
          {"learner", learner},
          {"episodes", eps},
          {"meta_policy", meta},
          {"combos", c.combos},
          {"seeds", c.seeds},
          {"output_dir", c.output_dir}};
}

std::string config_hash(const ExperimentConfig &config) {
  json j = config_to_json(config);
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace gremetl::harness
