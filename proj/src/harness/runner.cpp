// SPDX-License-Identifier: Apache-2.0
#include "harness/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "harness/environments.hpp"
#include "harness/report.hpp"
#include "numcore/rng.hpp"

namespace gremetl::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json hyper_json(const meta::HyperChoice &h) {
  return {{"lr", h.lr}, {"decay", h.decay}, {"width", h.width}};
}

std::string csv_number(double v) {
  if (!std::isfinite(v))
    return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string &dir, const std::string &name) {
  return (fs::path(dir) / name).string();
}

json run_json(const RunKey &key, const meta::RunRecord &rec) {
  std::size_t failed = 0, explored = 0;
  for (const auto &e : rec.entries) {
    failed += e.failed;
    explored += e.explored;
  }
  return {{"combo", key.combo},
          {"seed", key.seed},
          {"run_seed", key.run_seed},
          {"best_heldout", rec.summary.best_heldout},
          {"failed_epochs", failed},
          {"explored_epochs", explored},
          {"greedy_lambdas", rec.summary.greedy_lambdas},
          {"greedy_hyper", hyper_json(rec.summary.greedy_hyper)},
          {"final_failed", rec.summary.final_failed},
          {"final_heldout", eval_metrics_json(rec.summary.final_heldout)},
          {"final_test", eval_metrics_json(rec.summary.final_test)}};
}

std::string csv_header() {
  return "combo,seed,epoch,explored,failed,heldout_reward,heldout_loss,reward,"
         "best_heldout_so_far,test_reward,test_loss,lr,decay,width\n";
}

std::string csv_line(const RunKey &key, const meta::EpochEntry &e) {
  std::ostringstream out;
  out << key.combo << ',' << key.seed << ',' << e.epoch << ',' << (e.explored ? 1 : 0)
      << ',' << (e.failed ? 1 : 0) << ',' << csv_number(e.heldout.reward) << ','
      << csv_number(e.heldout.loss) << ',' << csv_number(e.reward) << ','
      << csv_number(e.best_heldout_so_far) << ',' << csv_number(e.test.reward) << ','
      << csv_number(e.test.loss) << ',' << csv_number(e.hyper.lr) << ','
      << csv_number(e.hyper.decay) << ',' << e.hyper.width << '\n';
  return out.str();
}

json stored_config(const ExperimentConfig &config) {
  json j = config_to_json(config);
  j["config_hash"] = config_hash(config);
  return j;
}

ExperimentConfig config_from_run_dir(const std::string &dir) {
  json j = read_json_file(join(dir, "config.json"));
  if (!j.is_object() || !j.contains("config_hash"))
    throw ValidationError(join(dir, "config.json"), "missing config_hash");
  const std::string stored = j.at("config_hash").get<std::string>();
  j.erase("config_hash");
  ExperimentConfig c = config_from_json(j);
  if (config_hash(c) != stored)
    throw ValidationError(join(dir, "config.json"), "config_hash does not match the stored config");
  return c;
}

} // namespace

std::uint64_t run_seed_for(std::uint64_t seed, std::size_t combo) {
  return num::derive_seed(seed, {combo});
}

json eval_metrics_json(const meta::EvalMetrics &m) {
  json j = {{"reward", m.reward}, {"loss", m.loss}};
  if (m.accuracy)
    j["accuracy"] = *m.accuracy;
  if (m.ndcg1)
    j["ndcg@1"] = *m.ndcg1;
  if (m.ndcg5)
    j["ndcg@5"] = *m.ndcg5;
  return j;
}

json metrics_line(const RunKey &key, const meta::EpochEntry &e) {
  return {{"format_version", kFormatVersion},
          {"combo", key.combo},
          {"seed", key.seed},
          {"run_seed", key.run_seed},
          {"epoch", e.epoch},
          {"explored", e.explored},
          {"failed", e.failed},
          {"lambdas", e.lambdas},
          {"hyper", hyper_json(e.hyper)},
          {"updates", e.updates},
          {"heldout", eval_metrics_json(e.heldout)},
          {"reward", e.reward},
          {"best_heldout_so_far", e.best_heldout_so_far},
          {"test", eval_metrics_json(e.test)}};
}

ExperimentResult run_experiment(const ExperimentConfig &config, bool write_files) {
  config.validate();
  const TaskData data = load_task_data(config);
  ExperimentResult res;
  for (std::size_t combo = 0; combo < config.combos; ++combo) {
    const episodes::MetaSet set = make_combo_meta_set(config, data, combo);
    const auto env = make_environment(config, data, set);
    for (std::uint64_t seed : config.seeds) {
      RunKey key{combo, seed, run_seed_for(seed, combo)};
      res.records.push_back(meta::meta_train(*env, config.meta_policy, key.run_seed));
      res.keys.push_back(key);
    }
  }

  json runs = json::array();
  json policies = json::array();
  for (std::size_t i = 0; i < res.keys.size(); ++i) {
    runs.push_back(run_json(res.keys[i], res.records[i]));
    policies.push_back({{"combo", res.keys[i].combo},
                        {"seed", res.keys[i].seed},
                        {"run_seed", res.keys[i].run_seed},
                        {"meta_lr", res.records[i].final_policy.meta_lr},
                        {"logits", res.records[i].final_policy.logits}});
  }
  const std::string hash = config_hash(config);
  res.summary = {{"format_version", kFormatVersion},
                 {"label", config.label},
                 {"config_hash", hash},
                 {"reward_metric", reward_metric_name(config)},
                 {"runs", runs},
                 {"aggregate", aggregate_to_json(aggregate_runs(runs))}};
  if (!write_files)
    return res;

  ensure_dir(config.output_dir);
  std::string jsonl, csv = csv_header();
  for (std::size_t i = 0; i < res.keys.size(); ++i)
    for (const auto &e : res.records[i].entries) {
      jsonl += metrics_line(res.keys[i], e).dump() + "\n";
      csv += csv_line(res.keys[i], e);
    }
  write_text_file(join(config.output_dir, "config.json"), stored_config(config).dump(2) + "\n");
  write_text_file(join(config.output_dir, "metrics.jsonl"), jsonl);
  write_text_file(join(config.output_dir, "metrics.csv"), csv);
  write_text_file(join(config.output_dir, "summary.json"), res.summary.dump(2) + "\n");
  const json policy = {{"format_version", kFormatVersion},
                       {"config_hash", hash},
                       {"runs", policies}};
  write_text_file(join(config.output_dir, "policy.json"), policy.dump(2) + "\n");
  return res;
}

std::size_t grid_point_count(double lo, double hi, double step) {
  if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi))
    throw ValidationError("grid_search.range", "need 0 <= lo <= hi <= 1");
  if (!(step > 0.0))
    throw ValidationError("grid_search.step", "must be positive");
  const double n = (hi - lo) / step;
  if (std::fabs(n - std::round(n)) > 1e-9)
    throw ValidationError("grid_search.step", "must divide the range [lo, hi]");
  return static_cast<std::size_t>(std::llround(n)) + 1;
}

GridResult grid_search_pexplore(const ExperimentConfig &config, double lo, double hi,
                                double step) {
  const std::size_t n = grid_point_count(lo, hi, step);
  config.validate();
  GridResult res;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::min(1.0, std::round((lo + step * static_cast<double>(i)) * 1e9) / 1e9);
    char name[32];
    std::snprintf(name, sizeof name, "p_explore_%.3f", p);
    ExperimentConfig c = config;
    c.meta_policy.p_explore = p;
    c.output_dir = join(config.output_dir, name);
    const ExperimentResult run = run_experiment(c, true);
    const auto agg = aggregate_runs(run.summary.at("runs"));
    GridPoint gp;
    gp.p_explore = p;
    gp.directory = c.output_dir;
    if (auto it = agg.find("final_heldout_reward"); it != agg.end()) {
      gp.mean = it->second.mean;
      gp.half_width = it->second.half_width;
      gp.n_runs = it->second.n_runs;
    }
    res.points.push_back(gp);
  }
  std::stable_sort(res.points.begin(), res.points.end(),
                   [](const GridPoint &a, const GridPoint &b) { return a.mean > b.mean; });
  res.best = res.points.front();

  auto point_json = [](const GridPoint &g) {
    return json{{"p_explore", g.p_explore},
                {"directory", g.directory},
                {"mean", g.mean},
                {"half_width", g.half_width ? json(*g.half_width) : json()},
                {"confidence_level", 0.99},
                {"n_runs", g.n_runs}};
  };
  json pts = json::array();
  std::string csv = "p_explore,mean_final_heldout_reward,half_width,n_runs,directory\n";
  for (const auto &g : res.points) {
    pts.push_back(point_json(g));
    csv += csv_number(g.p_explore) + "," + csv_number(g.mean) + "," +
           (g.half_width ? csv_number(*g.half_width) : "") + "," + std::to_string(g.n_runs) +
           "," + g.directory + "\n";
  }
  res.table = {{"format_version", kFormatVersion},
               {"metric", "final_heldout_reward"},
               {"reward_metric", reward_metric_name(config)},
               {"range", {lo, hi}},
               {"step", step},
               {"points", pts},
               {"best", point_json(res.best)}};
  ensure_dir(config.output_dir);
  write_text_file(join(config.output_dir, "grid_search.json"), res.table.dump(2) + "\n");
  write_text_file(join(config.output_dir, "grid_search.csv"), csv);
  return res;
}

json evaluate_run(const std::string &run_dir) {
  const ExperimentConfig config = config_from_run_dir(run_dir);
  const json policy = read_json_file(join(run_dir, "policy.json"));
  if (!policy.is_object() || policy.value("format_version", 0) != kFormatVersion ||
      !policy.contains("runs"))
    throw ValidationError(join(run_dir, "policy.json"), "not a policy file");
  if (policy.value("config_hash", std::string()) != config_hash(config))
    throw ValidationError(join(run_dir, "policy.json"), "config_hash does not match config.json");

  const TaskData data = load_task_data(config);
  json runs = json::array();
  try {
    for (const auto &r : policy.at("runs")) {
      const std::size_t combo = r.at("combo").get<std::size_t>();
      if (combo >= config.combos)
        throw ValidationError("policy.runs.combo", "out of range");
      const std::uint64_t run_seed = r.at("run_seed").get<std::uint64_t>();
      const episodes::MetaSet set = make_combo_meta_set(config, data, combo);
      const auto env = make_environment(config, data, set);
      const meta::ActionSpaces spaces =
        meta::make_action_spaces(config.meta_policy, env->group_count());
      meta::PolicyParams p;
      p.logits = r.at("logits").get<std::vector<std::vector<double>>>();
      p.meta_lr = r.at("meta_lr").get<double>();
      p.validate(spaces);
      const meta::ActionChoice greedy = meta::greedy_actions(p);
      const auto lambdas = greedy.lambdas(spaces);
      const auto hyper = greedy.hyper(spaces);
      const meta::FixedRunResult fixed =
        meta::run_fixed_actions(*env, lambdas, hyper, config.meta_policy.learner_epochs,
                                meta::learner_init_seed(run_seed));
      runs.push_back({{"combo", combo},
                      {"seed", r.at("seed")},
                      {"run_seed", run_seed},
                      {"greedy_lambdas", lambdas},
                      {"greedy_hyper", hyper_json(hyper)},
                      {"final_failed", fixed.failed},
                      {"final_heldout", eval_metrics_json(fixed.heldout)},
                      {"final_test", eval_metrics_json(fixed.test)}});
    }
  } catch (const json::exception &e) {
    throw ValidationError(join(run_dir, "policy.json"), e.what());
  }
  json out = {{"format_version", kFormatVersion},
              {"config_hash", config_hash(config)},
              {"runs", runs},
              {"aggregate", aggregate_to_json(aggregate_runs(runs))}};
  write_text_file(join(run_dir, "eval.json"), out.dump(2) + "\n");
  return out;
}

json make_domains(const ExperimentConfig &config) {
  if (config.task.source == TaskSource::Synthetic)
    throw ValidationError("task.source", "make-domains needs LETOR data (letor or synthetic_letor)");
  config.validate();
  const TaskData data = load_task_data(config);
  const auto &part = *data.partition;
  json scan = json::array();
  for (const auto &s : part.scan)
    scan.push_back({{"k", s.k}, {"silhouette", s.score}});
  json queries = json::array();
  for (std::size_t q = 0; q < data.queries.size(); ++q)
    queries.push_back({{"qid", data.queries[q].qid}, {"domain", part.domain[q]}});
  json domains = {{"format_version", kFormatVersion},
                  {"k", part.k},
                  {"silhouette", part.silhouette},
                  {"threshold", config.task.domains.threshold},
                  {"accepted", true},
                  {"scan", scan},
                  {"queries", queries}};
  json sets = json::array();
  for (std::size_t c = 0; c < config.combos; ++c)
    sets.push_back(episodes::meta_set_to_json(make_combo_meta_set(config, data, c)));
  const json manifests = {{"format_version", kFormatVersion},
                          {"unit", "query_index"},
                          {"meta_sets", sets}};
  ensure_dir(config.output_dir);
  write_text_file(join(config.output_dir, "domains.json"), domains.dump(2) + "\n");
  write_text_file(join(config.output_dir, "meta_sets.json"), manifests.dump(2) + "\n");
  return {{"k", part.k},
          {"silhouette", part.silhouette},
          {"queries", data.queries.size()},
          {"combos", config.combos},
          {"scan", scan}};
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out)
    throw IoError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string &path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw ValidationError(path, std::string("corrupt JSON: ") + e.what());
  }
}

} // namespace gremetl::harness
