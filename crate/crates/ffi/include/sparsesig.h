#ifndef SPARSESIG_H
#define SPARSESIG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_DOMAIN = 2,
  SS_STATUS_INVALID_MODEL = 3,
  SS_STATUS_DIVERGENT = 4,
  SS_STATUS_NO_LIMIT = 5,
  SS_STATUS_NUMERICAL = 6,
  SS_STATUS_PANIC = 7,
} SsStatus;

typedef enum {
  SS_SHAPE_CONSTANT = 0,
  SS_SHAPE_LINEAR2X = 1,
  /**
   * Uses the `param` argument as the exponent `a`.
   */
  SS_SHAPE_POWER_LAW = 2,
} SsShape;

typedef enum {
  SS_REGION_UNDETECTABLE = 0,
  SS_REGION_DETECTABLE = 1,
  SS_REGION_COMPLETELY_DETECTABLE = 2,
} SsRegion;

typedef enum {
  SS_TEST_HC = 0,
  SS_TEST_LLR = 1,
  SS_TEST_BOTH = 2,
} SsTest;

typedef enum {
  SS_SIDE_NULL = 0,
  SS_SIDE_ALTERNATIVE = 1,
} SsSide;

/**
 * Opaque pair of limit laws.
 */
typedef struct SsLimit SsLimit;

/**
 * Opaque detection model.
 */
typedef struct SsModel SsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ss_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ss_version(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
SsStatus ss_boundary_chimeric(double beta, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
SsStatus ss_boundary_powerlaw(double beta, double a, double *out);

/**
 * `case_out` receives 1 to 4 for the four branches of the boundary.
 *
 * # Safety
 * All out-pointers must be valid for writes.
 */
SsStatus ss_boundary_normal(double beta,
                            double sigma0,
                            double *r_out,
                            double *log_exponent_out,
                            int32_t *case_out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
SsStatus ss_boundary_dense(double beta, double *out);

/**
 * Higher criticism of `len` p-values.
 *
 * # Safety
 * `pvals` must point to `len` readable doubles and `out` be valid for writes.
 */
SsStatus ss_hc(const double *pvals, size_t len, double *out);

/**
 * # Safety
 * `out` must be valid for writes; on success `*out` owns a new model.
 */
SsStatus ss_model_chimeric(uint64_t n,
                           double beta,
                           double r,
                           SsShape kind,
                           double param,
                           SsModel **out);

/**
 * Normal location mixture; `dense != 0` selects the dense calibration.
 *
 * # Safety
 * `out` must be valid for writes; on success `*out` owns a new model.
 */
SsStatus ss_model_normal(uint64_t n,
                         double beta,
                         double r,
                         double sigma0,
                         int32_t dense,
                         SsModel **out);

/**
 * # Safety
 * `model` must be null or a handle from `ss_model_*` not yet freed.
 */
void ss_model_free(SsModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` valid for writes.
 */
SsStatus ss_model_epsilon(const SsModel *model, double *out);

/**
 * Region label from the I-sum classifier with default settings.
 *
 * # Safety
 * `model` must be a live handle and `out` valid for writes.
 */
SsStatus ss_classify(const SsModel *model, SsRegion *out);

/**
 * Monte Carlo power at level `alpha`. A statistic not covered by `test`
 * leaves its out-pointer untouched, which may then be null.
 * `threads == 0` uses the default pool.
 *
 * # Safety
 * `model` must be a live handle; non-null out-pointers must be writable.
 */
SsStatus ss_power(const SsModel *model,
                  SsTest test,
                  double alpha,
                  size_t reps,
                  uint64_t seed,
                  size_t threads,
                  double *hc_out,
                  double *llr_out);

/**
 * ARE of the LLR built for shape 2 against data from shape 1.
 *
 * # Safety
 * `out` must be valid for writes.
 */
SsStatus ss_are_shapes(SsShape kind1, double param1, SsShape kind2, double param2, double *out);

/**
 * # Safety
 * `out` must be valid for writes; on success `*out` owns a new limit.
 */
SsStatus ss_limit_powerlaw(double a, SsLimit **out);

/**
 * # Safety
 * `out` must be valid for writes; on success `*out` owns a new limit.
 */
SsStatus ss_limit_normal_quadratic(double beta, double sigma0, SsLimit **out);

/**
 * # Safety
 * `out` must be valid for writes; on success `*out` owns a new limit.
 */
SsStatus ss_limit_beta1(SsShape kind, double param, double r, SsLimit **out);

/**
 * # Safety
 * `limit` must be null or a handle from `ss_limit_*` not yet freed.
 */
void ss_limit_free(SsLimit *limit);

/**
 * Mass the alternative limit puts at `+inf`.
 *
 * # Safety
 * `limit` must be a live handle and `out` valid for writes.
 */
SsStatus ss_limit_mass_at_inf(const SsLimit *limit, double *out);

/**
 * Characteristic function at `t`; for the alternative, restricted to the
 * finite part.
 *
 * # Safety
 * `limit` must be a live handle and both out-pointers writable.
 */
SsStatus ss_limit_cf(const SsLimit *limit, SsSide side_, double t, double *re_out, double *im_out);

/**
 * Fill `buf` with `count` draws; infinite draws are stored as `±INFINITY`.
 *
 * # Safety
 * `limit` must be a live handle and `buf` writable for `count` doubles.
 */
SsStatus ss_limit_sample(const SsLimit *limit,
                         SsSide side_,
                         uint64_t seed,
                         size_t count,
                         double *buf);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSESIG_H */
