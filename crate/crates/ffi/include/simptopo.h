#ifndef SIMPTOPO_H
#define SIMPTOPO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SimptopoStatus {
  SIMPTOPO_STATUS_OK = 0,
  SIMPTOPO_STATUS_NULL_POINTER = 1,
  SIMPTOPO_STATUS_INVALID_ARGUMENT = 2,
  SIMPTOPO_STATUS_SHAPE_MISMATCH = 3,
  SIMPTOPO_STATUS_SOLVE_FAILED = 4,
  SIMPTOPO_STATUS_NUMERIC = 5,
  SIMPTOPO_STATUS_IO = 6,
  SIMPTOPO_STATUS_FORMAT = 7,
  SIMPTOPO_STATUS_PANIC = 8,
} SimptopoStatus;

// Superlevel-set persistence diagram of a field.
typedef struct SimptopoDiagram SimptopoDiagram;

// A density field on an `nely` x `nelx` element grid.
typedef struct SimptopoField SimptopoField;

// One persistence pair. Essential pairs have `death = -INFINITY`.
typedef struct SimptopoPair {
  double birth;
  double death;
  bool essential;
} SimptopoPair;

typedef struct SimptopoSimpParams {
  double volfrac;
  double rmin;
  double penal;
  double move_limit;
  double change_tol;
  size_t max_iters;
  double e0;
  double emin;
  double nu;
} SimptopoSimpParams;

// A point load on grid node `node` (column-major numbering, row 0 on top).
typedef struct SimptopoPointLoad {
  size_t node;
  double fx;
  double fy;
} SimptopoPointLoad;

typedef struct SimptopoSimpSummary {
  size_t iterations;
  bool converged;
  double compliance;
} SimptopoSimpSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into this library from the same thread.
const char *simptopo_last_error(void);

// Copies `nelx * nely` row-major values (row 0 on top) into a new field.
//
// # Safety
// `values` must point to `nelx * nely` readable doubles; `out` must be writable.
enum SimptopoStatus simptopo_field_new(size_t nelx,
                                       size_t nely,
                                       const double *values,
                                       struct SimptopoField **out_field);

// # Safety
// `field` must come from this library and not be used afterwards. Null is ignored.
void simptopo_field_free(struct SimptopoField *field);

// # Safety
// `field` must be a live handle; `nelx` and `nely` must be writable.
enum SimptopoStatus simptopo_field_shape(const struct SimptopoField *field,
                                         size_t *nelx,
                                         size_t *nely);

// Copies the row-major values into `dst`, which must hold exactly `len` doubles.
//
// # Safety
// `dst` must point to `len` writable doubles.
enum SimptopoStatus simptopo_field_values(const struct SimptopoField *field,
                                          double *dst,
                                          size_t len);

// # Safety
// `field` must be a live handle and `out_diagram` writable.
enum SimptopoStatus simptopo_diagram_compute(const struct SimptopoField *field,
                                             struct SimptopoDiagram **out_diagram);

// # Safety
// `diagram` must come from this library and not be used afterwards. Null is ignored.
void simptopo_diagram_free(struct SimptopoDiagram *diagram);

// Number of pairs in dimension `dim` (0 or 1).
//
// # Safety
// `diagram` must be a live handle and `len` writable.
enum SimptopoStatus simptopo_diagram_len(const struct SimptopoDiagram *diagram,
                                         size_t dim,
                                         size_t *len);

// Pair `index` of dimension `dim`, sorted by birth then death, both descending.
//
// # Safety
// `diagram` must be a live handle and `pair` writable.
enum SimptopoStatus simptopo_diagram_get(const struct SimptopoDiagram *diagram,
                                         size_t dim,
                                         size_t index,
                                         struct SimptopoPair *pair);

// Betti numbers of the superlevel set `{ρ >= t}`.
//
// # Safety
// `diagram` must be a live handle; `b0` and `b1` writable.
enum SimptopoStatus simptopo_betti(const struct SimptopoDiagram *diagram,
                                   double t,
                                   size_t *b0,
                                   size_t *b1);

// Exact bottleneck distance in dimension `dim`. Writes `INFINITY` when the
// essential class counts differ.
//
// # Safety
// Both diagrams must be live handles; `distance` writable.
enum SimptopoStatus simptopo_bottleneck(const struct SimptopoDiagram *a,
                                        const struct SimptopoDiagram *b,
                                        size_t dim,
                                        double *distance);

// # Safety
// Both fields must be live handles; `value` writable.
enum SimptopoStatus simptopo_mse(const struct SimptopoField *pred,
                                 const struct SimptopoField *truth,
                                 double *value);

// # Safety
// Both fields must be live handles; `value` writable.
enum SimptopoStatus simptopo_binary_accuracy(const struct SimptopoField *pred,
                                             const struct SimptopoField *truth,
                                             double *value);

// # Safety
// Both fields must be live handles; `value` writable.
enum SimptopoStatus simptopo_binary_cross_entropy(const struct SimptopoField *pred,
                                                  const struct SimptopoField *truth,
                                                  double *value);

// Cross-entropy plus `lambda` times the summed bottleneck distances.
//
// # Safety
// Both fields must be live handles; `value` writable.
enum SimptopoStatus simptopo_total_loss(const struct SimptopoField *pred,
                                        const struct SimptopoField *truth,
                                        double lambda,
                                        double *value);

// Default optimizer and material parameters.
struct SimptopoSimpParams simptopo_simp_params_default(void);

// Runs the optimizer and returns the final density as a new field.
// Hitting `max_iters` is not an error; check `summary.converged`.
//
// # Safety
// `params` must be readable, the arrays must hold the given counts, and
// `out_field` and `summary` must be writable.
enum SimptopoStatus simptopo_simp_run(size_t nelx,
                                      size_t nely,
                                      const struct SimptopoSimpParams *params,
                                      const size_t *fixed_dofs,
                                      size_t n_fixed,
                                      const struct SimptopoPointLoad *loads,
                                      size_t n_loads,
                                      struct SimptopoField **out_field,
                                      struct SimptopoSimpSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIMPTOPO_H */
