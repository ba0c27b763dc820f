#ifndef MIXWASS_H
#define MIXWASS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call. Values 1 to 3 match the CLI exit codes.
 */
typedef enum MixwassStatus {
  MIXWASS_STATUS_OK = 0,
  MIXWASS_STATUS_CONFIG = 1,
  MIXWASS_STATUS_NUMERICAL = 2,
  MIXWASS_STATUS_IO = 3,
  MIXWASS_STATUS_NULL_POINTER = 5,
  MIXWASS_STATUS_INVALID_UTF8 = 6,
  MIXWASS_STATUS_OUT_OF_BOUNDS = 7,
  MIXWASS_STATUS_PANIC = 8,
} MixwassStatus;

typedef enum MixwassSolveStatus {
  MIXWASS_SOLVE_STATUS_OPTIMAL = 0,
  MIXWASS_SOLVE_STATUS_MAX_ITERATIONS = 1,
  MIXWASS_SOLVE_STATUS_NUMERICAL_FAILURE = 2,
  MIXWASS_SOLVE_STATUS_INFEASIBLE_SUSPECTED = 3,
} MixwassSolveStatus;

typedef enum MixwassCertificate {
  MIXWASS_CERTIFICATE_INCONCLUSIVE = 0,
  MIXWASS_CERTIFICATE_NOT_MIXTURE = 1,
  MIXWASS_CERTIFICATE_MIXTURE_CANDIDATE = 2,
} MixwassCertificate;

/**
 * Opaque result of [`mixwass_run`].
 */
typedef struct MixwassReport MixwassReport;

/**
 * One row of the order trace.
 */
typedef struct MixwassOrder {
  size_t n;
  double tau;
  double tau_star;
  double gap;
  enum MixwassSolveStatus status;
  bool flat;
  /**
   * Rank of the top moment matrix, or -1 when flatness was not checked.
   */
  int64_t rank;
} MixwassOrder;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mixwass_last_error(void);

/**
 * Runs the hierarchy for a JSON configuration (same schema as the CLI's
 * `--config` file). On success `*out` receives a new report.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MixwassStatus mixwass_run(const char *config_json, struct MixwassReport **out);

/**
 * Releases a report. NULL is ignored.
 *
 * # Safety
 * `report` must come from [`mixwass_run`] and not be used afterwards.
 */
void mixwass_report_free(struct MixwassReport *report);

/**
 * Number of solved orders, or 0 for NULL.
 *
 * # Safety
 * `report` must be NULL or a live report.
 */
size_t mixwass_report_num_orders(const struct MixwassReport *report);

/**
 * Copies row `index` of the order trace into `*out`.
 *
 * # Safety
 * `report` must be a live report and `out` a valid pointer.
 */
enum MixwassStatus mixwass_report_order(const struct MixwassReport *report,
                                        size_t index,
                                        struct MixwassOrder *out);

/**
 * Kind of certificate, and the order it was reached at (0 when
 * inconclusive) in `*order` if non-NULL.
 *
 * # Safety
 * `report` must be a live report; `order` may be NULL.
 */
enum MixwassCertificate mixwass_report_certificate(const struct MixwassReport *report,
                                                   size_t *order);

/**
 * Number of atoms of the extracted mixture, 0 without a candidate.
 *
 * # Safety
 * `report` must be NULL or a live report.
 */
size_t mixwass_report_num_atoms(const struct MixwassReport *report);

/**
 * Atom `index` of the extracted mixture.
 *
 * # Safety
 * `report` must be a live report; the three outputs valid pointers.
 */
enum MixwassStatus mixwass_report_atom(const struct MixwassReport *report,
                                       size_t index,
                                       double *mean,
                                       double *sigma,
                                       double *weight);

/**
 * The full report as JSON. Free the string with [`mixwass_string_free`].
 *
 * # Safety
 * `report` must be a live report and `out` a valid pointer.
 */
enum MixwassStatus mixwass_report_json(const struct MixwassReport *report, char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void mixwass_string_free(char *s);

/**
 * Moments `mu_0..mu_max_degree` of a JSON measure spec, written to `out`,
 * which must hold `max_degree + 1` values.
 *
 * # Safety
 * `measure_json` must be a NUL-terminated string and `out` point to
 * `out_len` writable doubles.
 */
enum MixwassStatus mixwass_moments(const char *measure_json,
                                   size_t max_degree,
                                   double *out,
                                   size_t out_len);

/**
 * Squared W2 distance between two univariate Gaussians.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MixwassStatus mixwass_w2_gaussian(double mean1,
                                       double sigma1,
                                       double mean2,
                                       double sigma2,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXWASS_H */
