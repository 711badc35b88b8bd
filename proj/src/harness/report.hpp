// SPDX-License-Identifier: Apache-2.0
/**
 * @file   report.hpp
 * @brief  Aggregation of per-run summaries into mean +/- 99% CI tables.
 */
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gremetl::harness {

/// Metric columns in display order.
const std::vector<std::string> &metric_names();

/// Scalar metrics of one entry of summary.json "runs"; null values are
/// omitted.
std::map<std::string, double> flatten_run(const nlohmann::json &run);

struct Aggregate {
  double mean = 0.0;
  std::optional<double> half_width;
  std::size_t n_runs = 0;
};

/// Per-metric mean and 99% half-width over runs (half-width needs >= 2
/// values). Independent of run order.
std::map<std::string, Aggregate> aggregate_runs(const nlohmann::json &runs);
nlohmann::json aggregate_to_json(const std::map<std::string, Aggregate> &agg);

struct ReportRow {
  std::string label;
  std::string path;
  std::size_t n_runs = 0;
  std::map<std::string, Aggregate> metrics;
};

struct Report {
  std::vector<ReportRow> rows;
  std::string text;
  std::string csv;
};

/// Reads summary.json from each directory. Rows are ordered by label, then
/// path. Throws IoError or ValidationError on missing or corrupt files.
Report build_report(const std::vector<std::string> &run_dirs);

std::string format_mean_ci(const Aggregate &a);

} // namespace gremetl::harness
