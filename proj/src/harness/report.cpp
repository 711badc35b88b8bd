// SPDX-License-Identifier: Apache-2.0
#include "harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "common/error.hpp"
#include "harness/runner.hpp"
#include "objectives/metrics.hpp"

namespace gremetl::harness {

namespace {

void put(std::map<std::string, double> &out, const std::string &name,
         const nlohmann::json &block, const char *key) {
  if (!block.is_object())
    return;
  auto it = block.find(key);
  if (it != block.end() && it->is_number())
    out[name] = it->get<double>();
}

std::string pad(const std::string &s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s)
    out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

} // namespace

const std::vector<std::string> &metric_names() {
  static const std::vector<std::string> names{
    "best_heldout",      "final_heldout_reward", "final_heldout_loss",
    "final_test_reward", "final_test_loss",      "final_test_accuracy",
    "final_test_ndcg@1", "final_test_ndcg@5"};
  return names;
}

std::map<std::string, double> flatten_run(const nlohmann::json &run) {
  std::map<std::string, double> out;
  put(out, "best_heldout", run, "best_heldout");
  if (run.contains("final_heldout")) {
    const auto &h = run.at("final_heldout");
    put(out, "final_heldout_reward", h, "reward");
    put(out, "final_heldout_loss", h, "loss");
  }
  if (run.contains("final_test")) {
    const auto &t = run.at("final_test");
    put(out, "final_test_reward", t, "reward");
    put(out, "final_test_loss", t, "loss");
    put(out, "final_test_accuracy", t, "accuracy");
    put(out, "final_test_ndcg@1", t, "ndcg@1");
    put(out, "final_test_ndcg@5", t, "ndcg@5");
  }
  return out;
}

std::map<std::string, Aggregate> aggregate_runs(const nlohmann::json &runs) {
  std::map<std::string, std::vector<double>> values;
  for (const auto &run : runs)
    for (const auto &[k, v] : flatten_run(run))
      values[k].push_back(v);
  std::map<std::string, Aggregate> out;
  for (auto &[k, v] : values) {
    // Order-independent summation.
    std::sort(v.begin(), v.end());
    Aggregate a;
    a.n_runs = v.size();
    if (v.size() >= 2) {
      const auto s = objectives::confidence_interval(v, 0.99);
      a.mean = s.mean;
      a.half_width = s.half_width;
    } else {
      a.mean = v.front();
    }
    out[k] = a;
  }
  return out;
}

nlohmann::json aggregate_to_json(const std::map<std::string, Aggregate> &agg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto &[k, a] : agg)
    j[k] = {{"mean", a.mean},
            {"half_width", a.half_width ? nlohmann::json(*a.half_width) : nlohmann::json()},
            {"confidence_level", 0.99},
            {"n_runs", a.n_runs}};
  return j;
}

std::string format_mean_ci(const Aggregate &a) {
  return fixed(a.mean, 4) + " ± " + (a.half_width ? fixed(*a.half_width, 4) : "n/a");
}

Report build_report(const std::vector<std::string> &run_dirs) {
  if (run_dirs.empty())
    throw ValidationError("report", "at least one run directory is required");
  Report rep;
  for (const auto &dir : run_dirs) {
    const std::string path = (std::filesystem::path(dir) / "summary.json").string();
    const nlohmann::json s = read_json_file(path);
    if (!s.is_object() || !s.contains("runs") || !s.at("runs").is_array() ||
        s.value("format_version", 0) != kFormatVersion)
      throw ValidationError(path, "not a run summary (format_version " +
                                    std::to_string(kFormatVersion) + " expected)");
    ReportRow row;
    row.path = dir;
    row.label = s.value("label", std::string());
    if (row.label.empty())
      row.label = std::filesystem::path(dir).filename().string();
    row.n_runs = s.at("runs").size();
    row.metrics = aggregate_runs(s.at("runs"));
    rep.rows.push_back(std::move(row));
  }
  std::sort(rep.rows.begin(), rep.rows.end(), [](const auto &a, const auto &b) {
    return a.label != b.label ? a.label < b.label : a.path < b.path;
  });

  std::vector<std::string> cols;
  for (const auto &m : metric_names())
    for (const auto &r : rep.rows)
      if (r.metrics.count(m)) {
        cols.push_back(m);
        break;
      }

  std::vector<std::vector<std::string>> cells;
  cells.push_back({"method", "runs"});
  for (const auto &c : cols)
    cells.front().push_back(c);
  for (const auto &r : rep.rows) {
    std::vector<std::string> line{r.label, std::to_string(r.n_runs)};
    for (const auto &c : cols) {
      auto it = r.metrics.find(c);
      line.push_back(it == r.metrics.end() ? "-" : format_mean_ci(it->second));
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto &line : cells)
    for (std::size_t i = 0; i < line.size(); ++i)
      width[i] = std::max(width[i], line[i].size());
  for (const auto &line : cells) {
    std::string text;
    for (std::size_t i = 0; i < line.size(); ++i)
      text += (i ? "  " : "") + pad(line[i], width[i]);
    while (!text.empty() && text.back() == ' ')
      text.pop_back();
    rep.text += text + "\n";
  }
  rep.text += "(mean ± 99% confidence half-width, normal approximation)\n";

  rep.csv = "method,path,runs";
  for (const auto &c : cols)
    rep.csv += "," + c + "_mean," + c + "_half_width";
  rep.csv += "\n";
  for (const auto &r : rep.rows) {
    rep.csv += csv_field(r.label) + "," + csv_field(r.path) + "," + std::to_string(r.n_runs);
    for (const auto &c : cols) {
      auto it = r.metrics.find(c);
      if (it == r.metrics.end()) {
        rep.csv += ",,";
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", it->second.mean);
      rep.csv += std::string(",") + buf + ",";
      if (it->second.half_width) {
        std::snprintf(buf, sizeof buf, "%.17g", *it->second.half_width);
        rep.csv += buf;
      }
    }
    rep.csv += "\n";
  }
  return rep;
}

} // namespace gremetl::harness
