// SPDX-License-Identifier: Apache-2.0
/**
 * @file   gremetl.h
 * @brief  C interface to the gremetl meta-training library.
 *
 * Every call returns a status code. On failure a description is available
 * from gremetl_last_error() until the next failing call on the same thread.
 * Strings returned through `char **` are owned by the caller and released
 * with gremetl_string_free().
 */
#ifndef GREMETL_GREMETL_H
#define GREMETL_GREMETL_H

#include <stddef.h>
#include <stdint.h>

#if defined(GREMETL_BUILDING_LIBRARY)
#define GREMETL_API __attribute__((visibility("default")))
#else
#define GREMETL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gremetl_status {
  GREMETL_OK = 0,
  /** Configuration or input file rejected. */
  GREMETL_ERR_VALIDATION = 1,
  /** The run itself failed (degenerate data, rejected partition, ...). */
  GREMETL_ERR_RUNTIME = 2,
  GREMETL_ERR_IO = 3,
  /** Malformed LETOR text; the message carries the line number. */
  GREMETL_ERR_PARSE = 4,
  GREMETL_ERR_NUMERIC = 5,
  GREMETL_ERR_INVALID_ARGUMENT = 6
} gremetl_status;

typedef struct gremetl_experiment gremetl_experiment;

GREMETL_API const char *gremetl_version(void);
GREMETL_API const char *gremetl_last_error(void);
GREMETL_API void gremetl_string_free(char *s);

/* Experiment handles. */
GREMETL_API gremetl_status gremetl_experiment_from_json(const char *json,
                                                        gremetl_experiment **out);
GREMETL_API gremetl_status gremetl_experiment_from_file(const char *path,
                                                        gremetl_experiment **out);
GREMETL_API void gremetl_experiment_free(gremetl_experiment *exp);

/** Replaces the seed list with the single seed `seed`. */
GREMETL_API gremetl_status gremetl_experiment_set_seed(gremetl_experiment *exp,
                                                       uint64_t seed);
GREMETL_API gremetl_status gremetl_experiment_set_p_explore(gremetl_experiment *exp,
                                                            double p);
GREMETL_API gremetl_status gremetl_experiment_set_output_dir(gremetl_experiment *exp,
                                                             const char *dir);
/** Effective configuration as JSON, including its hash. */
GREMETL_API gremetl_status gremetl_experiment_config_json(const gremetl_experiment *exp,
                                                          char **out);

/* Commands. `out` may be NULL when the JSON result is not needed. */
GREMETL_API gremetl_status gremetl_meta_train(const gremetl_experiment *exp, char **out);
GREMETL_API gremetl_status gremetl_grid_search(const gremetl_experiment *exp, double lo,
                                               double hi, double step, char **out);
GREMETL_API gremetl_status gremetl_make_domains(const gremetl_experiment *exp, char **out);
GREMETL_API gremetl_status gremetl_eval(const char *run_dir, char **out);
/** Text table into `out`; the CSV form is written to `csv_path` unless NULL. */
GREMETL_API gremetl_status gremetl_report(const char *const *run_dirs, size_t n_dirs,
                                          const char *csv_path, char **out);

/* Utilities. */
GREMETL_API gremetl_status gremetl_ndcg_at_k(const double *scores, const int *grades,
                                             size_t n, size_t k, double *out);
GREMETL_API gremetl_status gremetl_confidence_interval(const double *values, size_t n,
                                                       double level, double *mean,
                                                       double *half_width);
/** Parses LETOR text and re-serialises it densely with canonical floats. */
GREMETL_API gremetl_status gremetl_letor_normalize(const char *text, char **out,
                                                   size_t *n_records);

#ifdef __cplusplus
}
#endif

#endif /* GREMETL_GREMETL_H */
