// SPDX-License-Identifier: Apache-2.0
/**
 * @file   runner.hpp
 * @brief  Experiment runs and their on-disk records.
 *
 * A run directory holds:
 *   config.json    the effective configuration and its hash
 *   metrics.jsonl  one line per (combination, seed, meta-epoch)
 *   metrics.csv    the same stream flattened for plotting
 *   summary.json   per-run final metrics and their confidence intervals
 *   policy.json    final policy logits per run
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "harness/config.hpp"
#include "meta_policy/meta_train.hpp"

namespace gremetl::harness {

struct RunKey {
  std::size_t combo = 0;
  std::uint64_t seed = 0;
  /// Master seed handed to meta_train.
  std::uint64_t run_seed = 0;
};

struct ExperimentResult {
  std::vector<RunKey> keys;
  std::vector<meta::RunRecord> records;
  nlohmann::json summary;
};

std::uint64_t run_seed_for(std::uint64_t seed, std::size_t combo);

/// Runs meta_train for every combination x seed. Files are written to
/// config.output_dir when `write_files` is set.
ExperimentResult run_experiment(const ExperimentConfig &config, bool write_files = true);

nlohmann::json metrics_line(const RunKey &key, const meta::EpochEntry &e);
nlohmann::json eval_metrics_json(const meta::EvalMetrics &m);

struct GridPoint {
  double p_explore = 0.0;
  std::string directory;
  double mean = 0.0;
  /// Null when fewer than two runs were aggregated.
  std::optional<double> half_width;
  std::size_t n_runs = 0;
};

struct GridResult {
  std::vector<GridPoint> points;
  GridPoint best;
  nlohmann::json table;
};

/// One full run per grid value in [lo, hi] with spacing `step`, written to
/// `<output_dir>/p_explore_<value>`; ranked by mean final heldout reward.
GridResult grid_search_pexplore(const ExperimentConfig &config, double lo = 0.0,
                                double hi = 1.0, double step = 0.1);

/// Number of grid points, validating that `step` divides [lo, hi].
std::size_t grid_point_count(double lo, double hi, double step);

/// Re-trains with the greedy actions of each stored policy and writes
/// eval.json into the run directory.
nlohmann::json evaluate_run(const std::string &run_dir);

/// Builds pseudo-domains and meta-set manifests into config.output_dir.
nlohmann::json make_domains(const ExperimentConfig &config);

void write_text_file(const std::string &path, const std::string &text);
std::string read_text_file(const std::string &path);
nlohmann::json read_json_file(const std::string &path);

} // namespace gremetl::harness
