#ifndef LW2D_H
#define LW2D_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Lw2dStatus {
  LW2D_STATUS_OK = 0,
  LW2D_STATUS_NULL_POINTER = 1,
  LW2D_STATUS_INVALID_ARGUMENT = 2,
  LW2D_STATUS_CONFIG = 3,
  LW2D_STATUS_PRECONDITION = 4,
  LW2D_STATUS_BLOW_UP = 5,
  LW2D_STATUS_IO = 6,
  LW2D_STATUS_PANIC = 7,
} Lw2dStatus;

typedef enum Lw2dGeometry {
  LW2D_GEOMETRY_PERIODIC = 0,
  LW2D_GEOMETRY_HALF_SPACE = 1,
  LW2D_GEOMETRY_QUARTER_SPACE = 2,
  LW2D_GEOMETRY_RECTANGLE = 3,
} Lw2dGeometry;

typedef enum Lw2dSideKind {
  LW2D_SIDE_KIND_EXTRAPOLATION = 0,
  LW2D_SIDE_KIND_DIRICHLET = 1,
  LW2D_SIDE_KIND_PERIODIC = 2,
} Lw2dSideKind;

/**
 * Opaque grid function.
 */
typedef struct Lw2dField Lw2dField;

/**
 * One side of the box. `value` is used only by `Dirichlet`.
 */
typedef struct Lw2dSide {
  enum Lw2dSideKind kind;
  double value;
} Lw2dSide;

/**
 * Boundary rules. `has_corner` selects whether `corner_delta` applies;
 * `mixed_extrapolate` nonzero makes Dirichlet/extrapolation corners copy
 * the interior neighbour instead of the Dirichlet value.
 */
typedef struct Lw2dBoundary {
  struct Lw2dSide left;
  struct Lw2dSide right;
  struct Lw2dSide bottom;
  struct Lw2dSide top;
  int has_corner;
  double corner_delta;
  int mixed_extrapolate;
} Lw2dBoundary;

/**
 * `a`, `b` velocities; `lambda = dt/dx`, `mu = dt/dy`.
 */
typedef struct Lw2dParams {
  double a;
  double b;
  double lambda;
  double mu;
} Lw2dParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Allocates a zero field. `out` receives the handle.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum Lw2dStatus lw2d_field_new(enum Lw2dGeometry geometry,
                               size_t nx,
                               size_t ny,
                               struct Lw2dField **out);

/**
 * Releases a handle from [`lw2d_field_new`]. Null is ignored.
 *
 * # Safety
 * `field` must be null or a live handle not freed before.
 */
void lw2d_field_free(struct Lw2dField *field);

/**
 * Writes one value. Ghost cells `-1` and `n` are addressable.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
enum Lw2dStatus lw2d_field_set(struct Lw2dField *field, ptrdiff_t j, ptrdiff_t k, double value);

/**
 * # Safety
 * `field` must be null or a live handle; `out` null or writable.
 */
enum Lw2dStatus lw2d_field_get(const struct Lw2dField *field,
                               ptrdiff_t j,
                               ptrdiff_t k,
                               double *out);

/**
 * Replaces the interior with `len = nx * ny` values in row-major order
 * (`j` fastest). Ghost cells are cleared.
 *
 * # Safety
 * `values` must point to `len` readable doubles.
 */
enum Lw2dStatus lw2d_field_set_interior(struct Lw2dField *field, const double *values, size_t len);

/**
 * Copies the interior into `out`, which holds `len = nx * ny` doubles.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum Lw2dStatus lw2d_field_copy_interior(const struct Lw2dField *field, double *out, size_t len);

/**
 * The rule set the energy analysis uses for `geometry`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum Lw2dStatus lw2d_boundary_canonical(enum Lw2dGeometry geometry, struct Lw2dBoundary *out);

/**
 * # Safety
 * Pointers must be null or valid.
 */
enum Lw2dStatus lw2d_field_fill_ghosts(struct Lw2dField *field,
                                       const struct Lw2dBoundary *boundary);

/**
 * One time step from `u` into `out`, which must share its geometry.
 * `u` gets its ghost ring from `boundary` first if it has none.
 *
 * # Safety
 * Pointers must be null or valid; `u` and `out` must be distinct handles.
 */
enum Lw2dStatus lw2d_step(const struct Lw2dField *u,
                          const struct Lw2dParams *params,
                          const struct Lw2dBoundary *boundary,
                          struct Lw2dField *out);

/**
 * Unweighted sum of squares over the interior.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum Lw2dStatus lw2d_l2_sq(const struct Lw2dField *field, double *out);

/**
 * Amplification factor at `(xi, eta)`, clamped to `[-pi, pi]`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum Lw2dStatus lw2d_amplification(const struct Lw2dParams *params,
                                   double xi,
                                   double eta,
                                   double *re,
                                   double *im);

/**
 * Runs the energy checks for the field's geometry.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum Lw2dStatus lw2d_verify(const struct Lw2dField *field,
                            const struct Lw2dParams *params,
                            double *max_identity_residual,
                            double *min_inequality_slack);

/**
 * Runs a config file and writes its outputs. `steps_run` receives the
 * number of completed steps; on blow-up the status is `BlowUp`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `steps_run` null or writable.
 */
enum Lw2dStatus lw2d_run_config(const char *path, size_t *steps_run);

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *lw2d_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LW2D_H */
