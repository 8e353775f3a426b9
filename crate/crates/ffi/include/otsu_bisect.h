#ifndef OTSU_BISECT_H
#define OTSU_BISECT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum OtsuStatus {
  OTSU_STATUS_OK = 0,
  OTSU_STATUS_NULL_POINTER = 1,
  OTSU_STATUS_INVALID_ARGUMENT = 2,
  OTSU_STATUS_MALFORMED_IMAGE = 3,
  OTSU_STATUS_UNSUPPORTED_FORMAT = 4,
  OTSU_STATUS_DEGENERATE_HISTOGRAM = 5,
  OTSU_STATUS_INVALID_CONFIG = 6,
  OTSU_STATUS_INVALID_BRACKET = 7,
  OTSU_STATUS_MAX_ITERATIONS = 8,
  OTSU_STATUS_IO = 9,
  OTSU_STATUS_PANIC = 10,
} OtsuStatus;

typedef enum OtsuMethod {
  OTSU_METHOD_EXHAUSTIVE = 0,
  OTSU_METHOD_BISECTION = 1,
} OtsuMethod;

typedef enum OtsuDecision {
  OTSU_DECISION_KEEP_MIDDLE = 0,
  OTSU_DECISION_MOVE_LOWER = 1,
  OTSU_DECISION_MOVE_UPPER = 2,
  OTSU_DECISION_CONVERGED = 3,
} OtsuDecision;

/**
 * Opaque histogram together with its cumulative moment table.
 */
typedef struct OtsuHistogram OtsuHistogram;

/**
 * Opaque 8-bit grayscale image.
 */
typedef struct OtsuImage OtsuImage;

/**
 * Opaque bisection trace.
 */
typedef struct OtsuTrace OtsuTrace;

typedef struct OtsuBisectionConfig {
  uint8_t low;
  uint8_t mid;
  uint8_t high;
  uint8_t width_stop;
  /**
   * When false, `plateau_epsilon` is ignored.
   */
  bool use_plateau_epsilon;
  double plateau_epsilon;
} OtsuBisectionConfig;

typedef struct OtsuThresholdResult {
  uint8_t threshold;
  uint32_t iterations;
  uint32_t reported_cost;
  uint64_t raw_evaluations;
  enum OtsuMethod method;
} OtsuThresholdResult;

/**
 * One trace row. Missing probe values are NaN and `has_probes` is false on
 * a width-based converged row.
 */
typedef struct OtsuTraceStep {
  uint32_t iteration;
  uint8_t t_low;
  uint8_t t_mid;
  uint8_t t_high;
  bool has_probes;
  uint8_t t1;
  uint8_t t2;
  double sigma_low;
  double sigma_t1;
  double sigma_mid;
  double sigma_t2;
  double sigma_high;
  enum OtsuDecision decision;
  uint64_t raw_evaluations;
} OtsuTraceStep;

typedef struct OtsuComparison {
  uint8_t t_exhaustive;
  uint8_t t_bisection;
  uint8_t deviation;
  uint32_t iterations_bisection;
  uint32_t cost_bisection;
  uint64_t raw_evaluations_bisection;
  double reduction_percent;
} OtsuComparison;

/**
 * Scalar callback for [`otsu_bisect_root`].
 */
typedef double (*OtsuScalarFn)(double x, void *user_data);

typedef struct OtsuRootResult {
  double root;
  size_t iterations;
} OtsuRootResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

const char *otsu_version(void);

/**
 * Static description of a status code.
 */
const char *otsu_status_message(enum OtsuStatus status);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *otsu_last_error_message(void);

struct OtsuBisectionConfig otsu_default_bisection_config(void);

/**
 * Decode a PGM (P2/P5, maxval 255) or PNG held in memory.
 */
enum OtsuStatus otsu_image_decode(const uint8_t *data, size_t len, struct OtsuImage **out);

/**
 * Copy `width * height` row-major pixels into a new image.
 */
enum OtsuStatus otsu_image_new(uint32_t width,
                               uint32_t height,
                               const uint8_t *pixels,
                               struct OtsuImage **out);

void otsu_image_free(struct OtsuImage *image);

uint32_t otsu_image_width(const struct OtsuImage *image);

uint32_t otsu_image_height(const struct OtsuImage *image);

/**
 * Borrowed pixel buffer, valid while the image lives.
 */
const uint8_t *otsu_image_pixels(const struct OtsuImage *image, size_t *len);

/**
 * Mask with `p >= threshold` white, or black when `invert` is set.
 */
enum OtsuStatus otsu_image_binarize(const struct OtsuImage *image,
                                    uint8_t threshold,
                                    bool invert,
                                    struct OtsuImage **out);

/**
 * Encode as PGM into a new buffer released with [`otsu_buffer_free`].
 */
enum OtsuStatus otsu_image_encode_pgm(const struct OtsuImage *image,
                                      bool plain,
                                      uint8_t **out_data,
                                      size_t *out_len);

void otsu_buffer_free(uint8_t *data, size_t len);

enum OtsuStatus otsu_histogram_from_image(const struct OtsuImage *image,
                                          struct OtsuHistogram **out);

/**
 * Build from 256 counts.
 */
enum OtsuStatus otsu_histogram_from_counts(const uint64_t *counts, struct OtsuHistogram **out);

void otsu_histogram_free(struct OtsuHistogram *hist);

/**
 * Copy the 256 counts into `out`.
 */
enum OtsuStatus otsu_histogram_counts(const struct OtsuHistogram *hist, uint64_t *out);

/**
 * Between-class variance at `t`.
 */
enum OtsuStatus otsu_sigma(const struct OtsuHistogram *hist, uint8_t t, double *out);

enum OtsuStatus otsu_exhaustive(const struct OtsuHistogram *hist, struct OtsuThresholdResult *out);

/**
 * Bisection search. `config` may be null for the defaults; `trace_out` may
 * be null when no trace is wanted.
 */
enum OtsuStatus otsu_bisection(const struct OtsuHistogram *hist,
                               const struct OtsuBisectionConfig *config,
                               struct OtsuThresholdResult *out,
                               struct OtsuTrace **trace_out);

size_t otsu_trace_len(const struct OtsuTrace *trace);

enum OtsuStatus otsu_trace_step(const struct OtsuTrace *trace,
                                size_t index,
                                struct OtsuTraceStep *out);

void otsu_trace_free(struct OtsuTrace *trace);

/**
 * Run both searches on independent evaluators.
 */
enum OtsuStatus otsu_compare(const struct OtsuHistogram *hist,
                             const struct OtsuBisectionConfig *config,
                             struct OtsuComparison *out);

/**
 * Sign-change bisection of `f` on `[a, b]`.
 */
enum OtsuStatus otsu_bisect_root(OtsuScalarFn f,
                                 void *user_data,
                                 double a,
                                 double b,
                                 double tol,
                                 size_t max_iter,
                                 struct OtsuRootResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OTSU_BISECT_H */
