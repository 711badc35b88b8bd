// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "harness/config.hpp"
#include "harness/report.hpp"
#include "harness/runner.hpp"
#include "oracles.hpp"

using namespace gremetl;
using namespace gremetl::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json quadratic_json(const std::string &out) {
  return {{"format_version", 1},
          {"label", "quad"},
          {"task", {{"source", "synthetic"}, {"family", "quadratic_bowl"}, {"dimension", 4},
                    {"n_tasks", 20}, {"seed", 3}}},
          {"meta_policy", {{"p_explore", 0.2}, {"meta_epochs", 3}, {"seed", 1}}},
          {"combos", 2},
          {"seeds", {1, 2}},
          {"output_dir", out}};
}

std::string fresh_dir(const std::string &name) {
  const fs::path p = fs::current_path() / "harness_tmp" / name;
  fs::remove_all(p);
  return p.string();
}

std::vector<std::string> lines_of(const std::string &path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);)
    if (!l.empty())
      out.push_back(l);
  return out;
}

std::string validation_path(const json &j) {
  try {
    config_from_json(j).validate();
  } catch (const ValidationError &e) {
    return e.field_path();
  }
  return "";
}

} // namespace

TEST_SUITE("harness.config") {
  TEST_CASE("round trip keeps the hash") {
    const ExperimentConfig c = config_from_json(quadratic_json("x"));
    const ExperimentConfig back = config_from_json(config_to_json(c));
    CHECK(config_hash(c) == config_hash(back));
    CHECK(back.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(back.meta_policy.meta_epochs == 3);
  }

  TEST_CASE("hash ignores the output directory but not the seeds") {
    const ExperimentConfig a = config_from_json(quadratic_json("x"));
    ExperimentConfig b = config_from_json(quadratic_json("y"));
    CHECK(config_hash(a) == config_hash(b));
    b.seeds = {1, 3};
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
  }

  TEST_CASE("errors name the offending field") {
    json j = quadratic_json("x");
    j["meta_policy"]["p_explore"] = 1.5;
    CHECK(validation_path(j) == "meta_policy.p_explore");

    j = quadratic_json("x");
    j["meta_policy"]["bogus"] = 1;
    CHECK(validation_path(j).find("bogus") != std::string::npos);

    j = quadratic_json("x");
    j["seeds"] = json::array();
    CHECK(validation_path(j).find("seeds") != std::string::npos);

    j = quadratic_json("x");
    j["combos"] = "two";
    CHECK(validation_path(j).find("combos") != std::string::npos);

    j = quadratic_json("x");
    j["learner"] = {{"kind", "mlp"}, {"activation", "relu"}};
    CHECK(validation_path(j).find("activation") != std::string::npos);

    j = quadratic_json("x");
    j["meta_policy"]["lambda_grid"] = {1.0, 0.5};
    CHECK(validation_path(j).find("lambda_grid") != std::string::npos);
  }

  TEST_CASE("missing config file") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
  }

  TEST_CASE("shipped configurations load") {
    for (const char *name : {"quadratic_gremetl.json", "quadratic_identity.json", "blobs_mlp.json",
                             "attributes_dual.json", "letor_synthetic.json"}) {
      INFO(name);
      const fs::path p = fs::path(GREMETL_CONFIG_DIR) / name;
      CHECK_NOTHROW(load_config(p.string()).validate());
    }
  }
}

TEST_SUITE("harness.runs") {
  TEST_CASE("run directory contents") {
    const std::string dir = fresh_dir("quad");
    const ExperimentConfig c = config_from_json(quadratic_json(dir));
    const auto res = run_experiment(c);
    CHECK(res.records.size() == 4);
    CHECK(lines_of(dir + "/metrics.jsonl").size() == 3 * 2 * 2);
    CHECK(lines_of(dir + "/metrics.csv").size() == 3 * 2 * 2 + 1);
    for (const auto &l : lines_of(dir + "/metrics.jsonl")) {
      const json j = json::parse(l);
      CHECK(j.at("format_version") == 1);
      CHECK(j.at("lambdas").size() == 4);
      CHECK(j.at("heldout").at("reward").get<double>() >= 0.0);
    }
    const json summary = read_json_file(dir + "/summary.json");
    CHECK(summary.at("runs").size() == 4);
    CHECK(summary.at("config_hash") == config_hash(c));
    CHECK(summary.at("reward_metric") == "inverse_loss");
    const json policy = read_json_file(dir + "/policy.json");
    CHECK(policy.at("runs").size() == 4);
    const json cfg = read_json_file(dir + "/config.json");
    CHECK(cfg.at("config_hash") == config_hash(c));
  }

  TEST_CASE("runs are reproducible and seeds are distinct") {
    const ExperimentConfig c = config_from_json(quadratic_json("unused"));
    const auto a = run_experiment(c, false);
    const auto b = run_experiment(c, false);
    CHECK(a.summary == b.summary);
    std::set<std::uint64_t> seeds;
    for (const auto &k : a.keys)
      seeds.insert(k.run_seed);
    CHECK(seeds.size() == a.keys.size());
    CHECK(run_seed_for(1, 0) != run_seed_for(1, 1));
  }

  TEST_CASE("eval replays the greedy run") {
    const std::string dir = fresh_dir("quad_eval");
    run_experiment(config_from_json(quadratic_json(dir)));
    const json ev = evaluate_run(dir);
    const json summary = read_json_file(dir + "/summary.json");
    REQUIRE(ev.at("runs").size() == summary.at("runs").size());
    for (std::size_t i = 0; i < ev.at("runs").size(); ++i)
      CHECK(ev["runs"][i]["final_heldout"]["reward"].get<double>() ==
            doctest::Approx(summary["runs"][i]["final_heldout"]["reward"].get<double>())
              .epsilon(1e-12));
    CHECK(fs::exists(dir + "/eval.json"));
    CHECK_THROWS_AS(evaluate_run(dir + "/missing"), IoError);
  }

  TEST_CASE("classification runs report accuracy") {
    json j = {{"format_version", 1},
              {"label", "blobs"},
              {"task", {{"source", "synthetic"}, {"family", "gaussian_blobs"}, {"dimension", 4},
                        {"n_tasks", 6}, {"seed", 2}}},
              {"learner", {{"kind", "mlp"}, {"activation", "tanh"}}},
              {"episodes", {{"layout", "shared"}, {"N", 3}, {"k", 3}, {"heldout", 5},
                            {"test", 5}, {"n_batches", 2}}},
              {"meta_policy", {{"meta_epochs", 2}, {"width_grid", {4}}}},
              {"combos", 1},
              {"seeds", {1}}};
    const auto res = run_experiment(config_from_json(j), false);
    const json run = res.summary.at("runs").at(0);
    const double acc = run.at("final_test").at("accuracy").get<double>();
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
}

TEST_SUITE("harness.report") {
  TEST_CASE("aggregates match an independent recomputation") {
    const std::string dir = fresh_dir("quad_report");
    json j = quadratic_json(dir);
    j["seeds"] = {1, 2, 3};
    run_experiment(config_from_json(j));
    const json summary = read_json_file(dir + "/summary.json");
    std::vector<double> v;
    for (const auto &r : summary.at("runs"))
      v.push_back(r.at("final_heldout").at("reward").get<double>());
    const auto expect = oracle::ci99(v);
    const Report rep = build_report({dir});
    REQUIRE(rep.rows.size() == 1);
    const Aggregate &a = rep.rows[0].metrics.at("final_heldout_reward");
    CHECK(a.n_runs == 6);
    CHECK(std::abs(a.mean - expect.mean) < 1e-9);
    REQUIRE(a.half_width.has_value());
    CHECK(std::abs(*a.half_width - expect.half_width) < 1e-9);
    CHECK(rep.text.find("quad") != std::string::npos);
    CHECK(rep.csv.find("final_heldout_reward") != std::string::npos);
  }

  TEST_CASE("aggregation is independent of run order") {
    json runs = json::array();
    for (int i = 0; i < 7; ++i)
      runs.push_back({{"best_heldout", 0.1 * i * i},
                      {"final_heldout", {{"reward", 1.0 / (1 + i)}, {"loss", i}}}});
    json reversed = runs;
    std::reverse(reversed.begin(), reversed.end());
    const auto a = aggregate_runs(runs);
    const auto b = aggregate_runs(reversed);
    for (const auto &[k, v] : a) {
      CHECK(std::abs(v.mean - b.at(k).mean) < 1e-12);
      CHECK(std::abs(*v.half_width - *b.at(k).half_width) < 1e-12);
    }
  }

  TEST_CASE("a single run has no interval") {
    json runs = json::array({{{"best_heldout", 0.5}}});
    const auto a = aggregate_runs(runs);
    CHECK(a.at("best_heldout").n_runs == 1);
    CHECK_FALSE(a.at("best_heldout").half_width.has_value());
    CHECK(format_mean_ci(a.at("best_heldout")).find("n/a") != std::string::npos);
  }

  TEST_CASE("missing and corrupt directories") {
    CHECK_THROWS_AS(build_report({fresh_dir("nothing_here")}), IoError);
    const std::string dir = fresh_dir("corrupt");
    fs::create_directories(dir);
    write_text_file(dir + "/summary.json", "{not json");
    CHECK_THROWS_AS(build_report({dir}), ValidationError);
  }
}

TEST_SUITE("harness.grid") {
  TEST_CASE("grid point count") {
    CHECK(grid_point_count(0.0, 1.0, 0.1) == 11);
    CHECK(grid_point_count(0.0, 1.0, 0.25) == 5);
    CHECK(grid_point_count(0.3, 0.3, 0.1) == 1);
    CHECK_THROWS_AS(grid_point_count(0.0, 1.0, 0.3), ValidationError);
    CHECK_THROWS_AS(grid_point_count(0.0, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(grid_point_count(0.5, 0.2, 0.1), ValidationError);
    CHECK_THROWS_AS(grid_point_count(0.0, 1.5, 0.5), ValidationError);
  }

  TEST_CASE("grid search writes one directory per value and picks the best mean") {
    const std::string dir = fresh_dir("grid");
    ExperimentConfig c = config_from_json(quadratic_json(dir));
    c.combos = 1;
    const GridResult g = grid_search_pexplore(c, 0.0, 1.0, 0.5);
    REQUIRE(g.points.size() == 3);
    double best = -1.0;
    for (const auto &p : g.points) {
      CHECK(fs::exists(fs::path(p.directory) / "summary.json"));
      best = std::max(best, p.mean);
    }
    CHECK(g.best.mean == best);
    CHECK(g.table.at("points").size() == 3);
  }
}
