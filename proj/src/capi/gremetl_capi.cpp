// SPDX-License-Identifier: Apache-2.0
#include "gremetl/gremetl.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/error.hpp"
#include "episodes/letor.hpp"
#include "harness/config.hpp"
#include "harness/report.hpp"
#include "harness/runner.hpp"
#include "objectives/metrics.hpp"

struct gremetl_experiment {
  gremetl::harness::ExperimentConfig config;
};

namespace {

thread_local std::string last_error;

gremetl_status status_of(gremetl::ErrorKind kind) {
  using gremetl::ErrorKind;
  switch (kind) {
  case ErrorKind::Validation:
    return GREMETL_ERR_VALIDATION;
  case ErrorKind::Parse:
    return GREMETL_ERR_PARSE;
  case ErrorKind::Io:
    return GREMETL_ERR_IO;
  case ErrorKind::Numeric:
    return GREMETL_ERR_NUMERIC;
  case ErrorKind::Usage:
    return GREMETL_ERR_INVALID_ARGUMENT;
  case ErrorKind::Shape:
  case ErrorKind::Degenerate:
  case ErrorKind::Rejected:
    break;
  }
  return GREMETL_ERR_RUNTIME;
}

gremetl_status fail(gremetl_status s, std::string message) {
  last_error = std::move(message);
  return s;
}

template <typename F> gremetl_status guarded(F &&body) {
  try {
    body();
    return GREMETL_OK;
  } catch (const gremetl::Error &e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const nlohmann::json::exception &e) {
    return fail(GREMETL_ERR_VALIDATION, e.what());
  } catch (const std::bad_alloc &) {
    return fail(GREMETL_ERR_RUNTIME, "out of memory");
  } catch (const std::exception &e) {
    return fail(GREMETL_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(GREMETL_ERR_RUNTIME, "unknown error");
  }
}

char *dup_string(const std::string &s) {
  char *p = static_cast<char *>(std::malloc(s.size() + 1));
  if (!p)
    throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

void emit(char **out, const std::string &s) {
  if (out)
    *out = dup_string(s);
}

gremetl_status null_argument(const char *name) {
  return fail(GREMETL_ERR_INVALID_ARGUMENT, std::string(name) + " must not be NULL");
}

} // namespace

extern "C" {

const char *gremetl_version(void) { return "0.1.0"; }

const char *gremetl_last_error(void) { return last_error.c_str(); }

void gremetl_string_free(char *s) { std::free(s); }

gremetl_status gremetl_experiment_from_json(const char *json, gremetl_experiment **out) {
  if (!json)
    return null_argument("json");
  if (!out)
    return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const auto j = nlohmann::json::parse(json);
    *out = new gremetl_experiment{gremetl::harness::config_from_json(j)};
  });
}

gremetl_status gremetl_experiment_from_file(const char *path, gremetl_experiment **out) {
  if (!path)
    return null_argument("path");
  if (!out)
    return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new gremetl_experiment{gremetl::harness::load_config(path)};
  });
}

void gremetl_experiment_free(gremetl_experiment *exp) { delete exp; }

gremetl_status gremetl_experiment_set_seed(gremetl_experiment *exp, uint64_t seed) {
  if (!exp)
    return null_argument("exp");
  exp->config.seeds = {seed};
  exp->config.meta_policy.seed = seed;
  return GREMETL_OK;
}

gremetl_status gremetl_experiment_set_p_explore(gremetl_experiment *exp, double p) {
  if (!exp)
    return null_argument("exp");
  return guarded([&] {
    auto next = exp->config;
    next.meta_policy.p_explore = p;
    next.validate();
    exp->config = std::move(next);
  });
}

gremetl_status gremetl_experiment_set_output_dir(gremetl_experiment *exp, const char *dir) {
  if (!exp)
    return null_argument("exp");
  if (!dir || !*dir)
    return fail(GREMETL_ERR_VALIDATION, "output_dir: must be a non-empty path");
  exp->config.output_dir = dir;
  return GREMETL_OK;
}

gremetl_status gremetl_experiment_config_json(const gremetl_experiment *exp, char **out) {
  if (!exp)
    return null_argument("exp");
  if (!out)
    return null_argument("out");
  return guarded([&] {
    auto j = gremetl::harness::config_to_json(exp->config);
    j["config_hash"] = gremetl::harness::config_hash(exp->config);
    emit(out, j.dump(2));
  });
}

gremetl_status gremetl_meta_train(const gremetl_experiment *exp, char **out) {
  if (!exp)
    return null_argument("exp");
  return guarded([&] {
    const auto result = gremetl::harness::run_experiment(exp->config, true);
    emit(out, result.summary.dump(2));
  });
}

gremetl_status gremetl_grid_search(const gremetl_experiment *exp, double lo, double hi,
                                   double step, char **out) {
  if (!exp)
    return null_argument("exp");
  return guarded([&] {
    const auto result = gremetl::harness::grid_search_pexplore(exp->config, lo, hi, step);
    emit(out, result.table.dump(2));
  });
}

gremetl_status gremetl_make_domains(const gremetl_experiment *exp, char **out) {
  if (!exp)
    return null_argument("exp");
  return guarded([&] { emit(out, gremetl::harness::make_domains(exp->config).dump(2)); });
}

gremetl_status gremetl_eval(const char *run_dir, char **out) {
  if (!run_dir)
    return null_argument("run_dir");
  return guarded([&] { emit(out, gremetl::harness::evaluate_run(run_dir).dump(2)); });
}

gremetl_status gremetl_report(const char *const *run_dirs, size_t n_dirs,
                              const char *csv_path, char **out) {
  if (!run_dirs && n_dirs)
    return null_argument("run_dirs");
  return guarded([&] {
    std::vector<std::string> dirs;
    for (size_t i = 0; i < n_dirs; ++i) {
      if (!run_dirs[i])
        throw gremetl::UsageError("run_dirs[" + std::to_string(i) + "] is NULL");
      dirs.emplace_back(run_dirs[i]);
    }
    const auto rep = gremetl::harness::build_report(dirs);
    if (csv_path)
      gremetl::harness::write_text_file(csv_path, rep.csv);
    emit(out, rep.text);
  });
}

gremetl_status gremetl_ndcg_at_k(const double *scores, const int *grades, size_t n,
                                 size_t k, double *out) {
  if ((!scores || !grades) && n)
    return null_argument("scores/grades");
  if (!out)
    return null_argument("out");
  return guarded([&] {
    gremetl::objectives::RankedList list;
    for (size_t i = 0; i < n; ++i)
      list.items.push_back({scores[i], grades[i]});
    *out = gremetl::objectives::ndcg_at_k(list, k);
  });
}

gremetl_status gremetl_confidence_interval(const double *values, size_t n, double level,
                                           double *mean, double *half_width) {
  if (!values && n)
    return null_argument("values");
  if (!mean || !half_width)
    return null_argument("mean/half_width");
  return guarded([&] {
    const auto s = gremetl::objectives::confidence_interval(
      std::span<const double>(values, n), level);
    *mean = s.mean;
    *half_width = s.half_width;
  });
}

gremetl_status gremetl_letor_normalize(const char *text, char **out, size_t *n_records) {
  if (!text)
    return null_argument("text");
  if (!out)
    return null_argument("out");
  return guarded([&] {
    const auto records = gremetl::episodes::parse_letor_text(text);
    if (n_records)
      *n_records = records.size();
    emit(out, gremetl::episodes::serialize_letor(records));
  });
}

} // extern "C"
