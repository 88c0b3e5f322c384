#ifndef SHAPEFLOW_H
#define SHAPEFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of fallible calls.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_SOLVER_FAILURE = 3,
  SF_STATUS_INVARIANT_VIOLATION = 4,
  SF_STATUS_IO = 5,
  SF_STATUS_PANIC = 6,
} SfStatus;

/**
 * Grid over a box (opaque).
 */
typedef struct SfDomain SfDomain;

/**
 * Shape mask on a grid (opaque).
 */
typedef struct SfMask SfMask;

/**
 * Set distances between two masks; `fraenkel` is NaN when undefined.
 */
typedef struct SfSetDistances {
  double hausdorff;
  double hausdorff_complement;
  double oriented_l2;
  double characteristic;
  double fraenkel;
} SfSetDistances;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sf_version(void);

/**
 * Message of the last failed call on this thread (empty after a success).
 * The pointer stays valid until the next call on this thread.
 */
const char *sf_last_error_message(void);

/**
 * Square domain `[lo, hi]²` with `n` cells per axis.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum SfStatus sf_domain_square(double lo, double hi, size_t n, struct SfDomain **out_domain);

/**
 * Releases a domain; null is ignored.
 *
 * # Safety
 * `domain` must come from this library and not be used afterwards.
 */
void sf_domain_free(struct SfDomain *domain);

/**
 * Rasterizes the disk of radius `r` centered at `(cx, cy)`.
 *
 * # Safety
 * `domain` must be a live handle and `out_mask` writable.
 */
enum SfStatus sf_mask_disk(const struct SfDomain *domain,
                           double cx,
                           double cy,
                           double r,
                           struct SfMask **out_mask);

/**
 * Rasterizes a primitive given as JSON (the configuration format).
 *
 * # Safety
 * `domain` must be a live handle, `json` a NUL-terminated string and
 * `out_mask` writable.
 */
enum SfStatus sf_mask_from_json(const struct SfDomain *domain,
                                const char *json,
                                struct SfMask **out_mask);

/**
 * Releases a mask; null is ignored.
 *
 * # Safety
 * `mask` must come from this library and not be used afterwards.
 */
void sf_mask_free(struct SfMask *mask);

/**
 * Number of cells inside the mask.
 *
 * # Safety
 * `mask` must be a live handle and `count` writable.
 */
enum SfStatus sf_mask_count(const struct SfMask *mask, size_t *count);

/**
 * Lebesgue measure of the mask.
 *
 * # Safety
 * `mask` must be a live handle and `volume` writable.
 */
enum SfStatus sf_mask_volume(const struct SfMask *mask, double *volume);

/**
 * First Dirichlet eigenvalue of the mask.
 *
 * # Safety
 * `mask` must be a live handle and `lambda1` writable.
 */
enum SfStatus sf_lambda1(const struct SfMask *mask, double *lambda1);

/**
 * Torsion energy `−∫ w` of the mask.
 *
 * # Safety
 * `mask` must be a live handle and `energy` writable.
 */
enum SfStatus sf_torsion_energy(const struct SfMask *mask, double *energy);

/**
 * All set distances between two masks on the same domain.
 *
 * # Safety
 * `a` and `b` must be live handles and `result` writable.
 */
enum SfStatus sf_set_distances(const struct SfMask *a,
                               const struct SfMask *b,
                               struct SfSetDistances *result);

/**
 * Closed-form radius of the ball flow of `λ₁` at time `t`.
 *
 * # Safety
 * `radius` must be writable.
 */
enum SfStatus sf_ball_flow_reference(double r0, size_t dim, double t, double *radius);

/**
 * Runs a command-line command; returns its exit code (0, 2, 3 or 4), or
 * -1 for null or non-UTF-8 arguments. `seed` is used when `has_seed` is
 * nonzero.
 *
 * # Safety
 * `command`, `config_path` and `out_dir` must be NUL-terminated strings.
 */
int sf_run_command(const char *command,
                   const char *config_path,
                   const char *out_dir,
                   uint64_t seed,
                   int has_seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPEFLOW_H */
