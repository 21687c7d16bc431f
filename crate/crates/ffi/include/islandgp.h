#ifndef ISLANDGP_H
#define ISLANDGP_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IgpApp {
  IGP_APP_FEED = 0,
  IGP_APP_LOCALISATION = 1,
} IgpApp;

typedef enum IgpStatus {
  IGP_STATUS_OK = 0,
  IGP_STATUS_NULL_ARGUMENT = 1,
  IGP_STATUS_INVALID_UTF8 = 2,
  IGP_STATUS_INVALID_CONFIG = 3,
  IGP_STATUS_PARSE = 4,
  IGP_STATUS_RUN_FAILED = 5,
  IGP_STATUS_OUT_OF_RANGE = 6,
  IGP_STATUS_PANIC = 7,
} IgpStatus;

/**
 * Experiment configuration handle.
 */
typedef struct IgpConfig IgpConfig;

/**
 * Result of a run.
 */
typedef struct IgpDataset IgpDataset;

/**
 * One CSV row of a dataset.
 */
typedef struct IgpRow {
  size_t iteration;
  uint64_t generation;
  size_t island;
  double max_fitness;
  double mean_fitness;
  double mean_size;
  double mean_depth;
  size_t immigrants_admitted;
  size_t emigrants_sent;
  size_t helper_rejections;
} IgpRow;

/**
 * Generations at which the mean max-fitness curve first reaches the
 * threshold; the `has_*` flags are false when it never does.
 */
typedef struct IgpComparison {
  double threshold;
  bool has_baseline;
  uint64_t baseline;
  bool has_treatment;
  uint64_t treatment;
  bool has_improvement;
  double improvement;
} IgpComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL. Valid until
 * the next call into the library from the same thread.
 */
const char *igp_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void igp_string_free(char *s);

double igp_feed_fitness(size_t displayed, size_t desired_qty, size_t clicked);

/**
 * Accuracy score of a position `distance` metres from the reference whose
 * accuracy radius is `radius`.
 */
double igp_accuracy_fitness(double distance, double radius);

/**
 * Energy score of a mean draw against a budget current, both in mA.
 */
double igp_energy_fitness(double power_ma, double budget_ma);

/**
 * Parses and validates a program for `app`'s default primitives and writes
 * its canonical text to `*canonical` (free with `igp_string_free`).
 *
 * # Safety
 * `program` must be a NUL-terminated string; `canonical` must be writable.
 */
enum IgpStatus igp_program_canonical(enum IgpApp app, const char *program, char **canonical);

/**
 * A configuration holding the defaults.
 */
struct IgpConfig *igp_config_new(void);

/**
 * Overlays TOML settings (the CLI's `--config` format) onto `config`.
 * Relative file paths resolve against the working directory. On error the
 * configuration is left unchanged.
 *
 * # Safety
 * `config` must come from `igp_config_new`; `toml` must be a NUL-terminated
 * string.
 */
enum IgpStatus igp_config_apply_toml(struct IgpConfig *config, const char *toml);

/**
 * # Safety
 * `config` must be NULL or come from `igp_config_new`, not yet freed.
 */
void igp_config_free(struct IgpConfig *config);

/**
 * Runs the experiment and stores a new dataset in `*out`.
 *
 * # Safety
 * `config` must come from `igp_config_new`; `out` must be writable.
 */
enum IgpStatus igp_run(const struct IgpConfig *config, struct IgpDataset **out);

/**
 * Number of rows, 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live dataset handle.
 */
size_t igp_dataset_len(const struct IgpDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live dataset handle; `row` must be writable.
 */
enum IgpStatus igp_dataset_row(const struct IgpDataset *dataset, size_t index, struct IgpRow *row);

/**
 * The dataset as CSV text (free with `igp_string_free`).
 *
 * # Safety
 * `dataset` must be a live dataset handle; `csv` must be writable.
 */
enum IgpStatus igp_dataset_csv(const struct IgpDataset *dataset, char **csv);

/**
 * Generations-to-threshold of two datasets.
 *
 * # Safety
 * Both datasets must be live handles; `out` must be writable.
 */
enum IgpStatus igp_compare(const struct IgpDataset *baseline,
                           const struct IgpDataset *treatment,
                           double threshold,
                           struct IgpComparison *out);

/**
 * # Safety
 * `dataset` must be NULL or a dataset handle, not yet freed.
 */
void igp_dataset_free(struct IgpDataset *dataset);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISLANDGP_H */
