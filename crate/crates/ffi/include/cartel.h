#ifndef CARTEL_H
#define CARTEL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Initial values for money.
 */
typedef enum CartelInit {
  CARTEL_INIT_UNIFORM = 0,
  CARTEL_INIT_ALL_ONES = 1,
} CartelInit;

/**
 * Status codes returned by every entry point.
 */
typedef enum CartelStatus {
  CARTEL_STATUS_OK = 0,
  CARTEL_STATUS_INVALID_PARAM = 1,
  CARTEL_STATUS_NO_CONVERGENCE = 2,
  CARTEL_STATUS_NO_SIGN_CHANGE = 3,
  CARTEL_STATUS_NON_MONOTONE = 4,
  CARTEL_STATUS_STEP_TOO_LARGE = 5,
  CARTEL_STATUS_INSUFFICIENT_DATA = 6,
  CARTEL_STATUS_PARSE = 7,
  CARTEL_STATUS_IO = 8,
  CARTEL_STATUS_NULL_POINTER = 9,
  CARTEL_STATUS_BUFFER_TOO_SMALL = 10,
  CARTEL_STATUS_PANIC = 11,
} CartelStatus;

/**
 * Opaque master-equation state: the equation plus the current grid and time.
 */
typedef struct CartelMaster CartelMaster;

/**
 * Opaque simulation handle.
 */
typedef struct CartelSimulation CartelSimulation;

/**
 * Simulation parameters, mirroring the command-line flags.
 */
typedef struct CartelSimParams {
  uint64_t n;
  uint64_t k;
  double a;
  double r;
  uint64_t seed;
  uint64_t burn_in_sweeps;
  uint64_t measure_sweeps;
  uint64_t record_every_sweeps;
  enum CartelInit init;
} CartelSimParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *cartel_last_error(void);

/**
 * Fills `out` with the command-line defaults.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `CartelSimParams`.
 */
enum CartelStatus cartel_sim_params_default(struct CartelSimParams *out);

/**
 * Burn-in plus measurement; writes the time-averaged `<w>` and its variance.
 *
 * # Safety
 * `params` must point to a valid `CartelSimParams`; `mean_w` and `var_w`
 * must point to writable doubles.
 */
enum CartelStatus cartel_run(const struct CartelSimParams *params, double *mean_w, double *var_w);

/**
 * Creates a simulation in its initial state.
 *
 * # Safety
 * `params` must point to a valid `CartelSimParams`; `out` must point to
 * writable storage for a handle.
 */
enum CartelStatus cartel_simulation_new(const struct CartelSimParams *params,
                                        struct CartelSimulation **out);

/**
 * Releases a simulation. Null is ignored.
 *
 * # Safety
 * `sim` must be null or a handle from `cartel_simulation_new` not yet freed.
 */
void cartel_simulation_free(struct CartelSimulation *sim);

/**
 * Advances the simulation by `sweeps` sweeps of N elementary updates.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum CartelStatus cartel_simulation_run_sweeps(struct CartelSimulation *sim, uint64_t sweeps);

/**
 * Current population mean of `w`.
 *
 * # Safety
 * `sim` must be a live handle; `out` must point to a writable double.
 */
enum CartelStatus cartel_simulation_mean_w(const struct CartelSimulation *sim, double *out);

/**
 * Number of sweeps completed so far.
 *
 * # Safety
 * `sim` must be a live handle; `out` must point to a writable integer.
 */
enum CartelStatus cartel_simulation_sweeps_done(const struct CartelSimulation *sim, uint64_t *out);

/**
 * Copies the N values for money into `buf` (`len` must be at least N).
 *
 * # Safety
 * `sim` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum CartelStatus cartel_simulation_copy_w(const struct CartelSimulation *sim,
                                           double *buf,
                                           size_t len);

/**
 * Copies the N in-degrees into `buf` (`len` must be at least N).
 *
 * # Safety
 * `sim` must be a live handle; `buf` must point to `len` writable integers.
 */
enum CartelStatus cartel_simulation_copy_in_degree(const struct CartelSimulation *sim,
                                                   uint32_t *buf,
                                                   size_t len);

/**
 * Critical update rate for mean degree `k`, to within `tol`.
 *
 * # Safety
 * `a_c` must point to a writable double.
 */
enum CartelStatus cartel_critical_a(uint32_t k, double tol, double *a_c);

/**
 * Creates a master-equation state on a `(k_max + 1) × n_w` grid, starting
 * from the uniform-`w`, Poisson(K) state. `k_max = 0` selects the default.
 *
 * # Safety
 * `out` must point to writable storage for a handle.
 */
enum CartelStatus cartel_master_new(uint32_t k,
                                    size_t k_max,
                                    size_t n_w,
                                    struct CartelMaster **out);

/**
 * Releases a master-equation state. Null is ignored.
 *
 * # Safety
 * `m` must be null or a handle from `cartel_master_new` not yet freed.
 */
void cartel_master_free(struct CartelMaster *m);

/**
 * Resets the state to all mass at `w = 1` except `eps` in column `col`, and
 * the clock to zero.
 *
 * # Safety
 * `m` must be a live handle.
 */
enum CartelStatus cartel_master_set_perturbed(struct CartelMaster *m, size_t col, double eps);

/**
 * Integrates the held state forward by `duration` sweeps with step `dt` and
 * writes the final `<w>`.
 *
 * # Safety
 * `m` must be a live handle; `mean_w` must point to a writable double.
 */
enum CartelStatus cartel_master_integrate(struct CartelMaster *m,
                                          double a,
                                          double dt,
                                          double duration,
                                          double *mean_w);

/**
 * Elapsed integration time since creation or the last reset.
 *
 * # Safety
 * `m` must be a live handle; `out` must point to a writable double.
 */
enum CartelStatus cartel_master_time(const struct CartelMaster *m, double *out);

/**
 * Copies `P(k, w)` row-major in `k` into `buf`, which must hold
 * `(k_max + 1) · n_w` doubles.
 *
 * # Safety
 * `m` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum CartelStatus cartel_master_copy_grid(const struct CartelMaster *m, double *buf, size_t len);

/**
 * Grid shape: `k_max` and `n_w`.
 *
 * # Safety
 * `m` must be a live handle; `k_max` and `n_w` must point to writable integers.
 */
enum CartelStatus cartel_master_shape(const struct CartelMaster *m, size_t *k_max, size_t *n_w);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CARTEL_H */
