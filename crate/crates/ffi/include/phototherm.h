#ifndef PHOTOTHERM_H
#define PHOTOTHERM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PtStatus {
  PT_STATUS_OK = 0,
  PT_STATUS_NULL_POINTER = 1,
  PT_STATUS_INVALID_ARGUMENT = 2,
  PT_STATUS_SHAPE_MISMATCH = 3,
  /*
   Unstable step, diverged solver or an unmeasurable lobe.
   */
  PT_STATUS_NUMERICAL = 4,
  PT_STATUS_IO = 5,
  PT_STATUS_PANIC = 6,
} PtStatus;

/*
 Walker start positions.
 */
typedef enum PtSource {
  /*
   Every walker in `cell`.
   */
  PT_SOURCE_CELL = 0,
  /*
   Middle cell; on an even lattice each walker picks one of the two middle cells.
   */
  PT_SOURCE_CENTER = 1,
  PT_SOURCE_UNIFORM = 2,
} PtSource;

/*
 Virtual-wave kernel on uniform grids `t = dt, 2dt, ...` and `tp = 0, dtp, ...`.
 */
typedef struct PtKernel PtKernel;

/*
 Two-dimensional point-spread function of a square grid.
 */
typedef struct PtPsf PtPsf;

/*
 Reflecting random walk ensemble.
 */
typedef struct PtWalk PtWalk;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length excluding the NUL, or
 0 when there is no error.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t pt_last_error(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *pt_version(void);

/*
 Spatial cut-off wavenumber for a time-domain measurement.

 # Safety
 `out_k` must be valid for writing.
 */
enum PtStatus pt_k_cut(double snr, double alpha, double t, double *out_k);

/*
 Resolution limit of a time-domain measurement.

 # Safety
 `out_dr` must be valid for writing.
 */
enum PtStatus pt_delta_r_time(double alpha, double t, double snr, double *out_dr);

/*
 Resolution limit at depth `x` for a frequency-domain measurement.

 # Safety
 `out_dr` must be valid for writing.
 */
enum PtStatus pt_delta_r_depth(double x, double snr, double *out_dr);

/*
 SNR and resolution factors from averaging over `n_detectors`.

 # Safety
 Both outputs must be valid for writing.
 */
enum PtStatus pt_averaging_gain(size_t n_detectors, double *out_snr, double *out_resolution);

/*
 # Safety
 `out_kernel` must be valid for writing.
 */
enum PtStatus pt_kernel_new(size_t nt,
                            double dt,
                            size_t ntp,
                            double dtp,
                            double c,
                            double alpha,
                            struct PtKernel **out_kernel);

/*
 # Safety
 `kernel` must be null or a handle from [`pt_kernel_new`] not yet freed.
 */
void pt_kernel_free(struct PtKernel *kernel);

/*
 # Safety
 `kernel` must be a live handle; outputs must be valid for writing.
 */
enum PtStatus pt_kernel_dims(const struct PtKernel *kernel, size_t *out_nt, size_t *out_ntp);

/*
 Temperature signal `y = K x`.

 # Safety
 `x` must hold `nx` values and `y` room for `ny`.
 */
enum PtStatus pt_kernel_apply(const struct PtKernel *kernel,
                              const double *x,
                              size_t nx,
                              double *y,
                              size_t ny);

/*
 Truncated-SVD virtual wave. `out_rank` may be null.

 # Safety
 `y` must hold `ny` values, `x` room for `nx`, and `out_rank` null or writable.
 */
enum PtStatus pt_kernel_invert_tsvd(const struct PtKernel *kernel,
                                    const double *y,
                                    size_t ny,
                                    double rel_threshold,
                                    double *x,
                                    size_t nx,
                                    size_t *out_rank);

/*
 Nonnegative l1-regularised virtual wave with `lambda = fraction * lambda_max`.
 `out_converged` may be null.

 # Safety
 `y` must hold `ny` values, `x` room for `nx`, and `out_converged` null or writable.
 */
enum PtStatus pt_kernel_invert_admm(const struct PtKernel *kernel,
                                    const double *y,
                                    size_t ny,
                                    double fraction,
                                    size_t max_iters,
                                    double *x,
                                    size_t nx,
                                    bool *out_converged);

/*
 `cell` is read only for [`PtSource::Cell`].

 # Safety
 `out_walk` must be valid for writing.
 */
enum PtStatus pt_walk_new(size_t n_cells,
                          size_t n_walkers,
                          enum PtSource source,
                          size_t cell,
                          uint64_t seed,
                          struct PtWalk **out_walk);

/*
 # Safety
 `walk` must be null or a handle from [`pt_walk_new`] not yet freed.
 */
void pt_walk_free(struct PtWalk *walk);

/*
 # Safety
 `walk` must be a live handle, not used concurrently.
 */
enum PtStatus pt_walk_step(struct PtWalk *walk, size_t n_steps);

/*
 Steps taken so far.

 # Safety
 `walk` must be a live handle and `out_time` writable.
 */
enum PtStatus pt_walk_time(const struct PtWalk *walk, uint64_t *out_time);

/*
 Walker count per cell; `counts` must have room for `n_cells` entries.

 # Safety
 `walk` must be a live handle and `counts` valid for `n` writes.
 */
enum PtStatus pt_walk_histogram(const struct PtWalk *walk, uint64_t *counts, size_t n);

/*
 Grid of `n x n` samples over `[-half, half]` in both directions.

 # Safety
 `out_psf` must be valid for writing.
 */
enum PtStatus pt_psf_new(double snr, double depth, size_t n, double half, struct PtPsf **out_psf);

/*
 # Safety
 `psf` must be null or a handle from [`pt_psf_new`] not yet freed.
 */
void pt_psf_free(struct PtPsf *psf);

/*
 Samples in row-major `[z][x]` order.

 # Safety
 `psf` must be a live handle and `values` valid for `n` writes.
 */
enum PtStatus pt_psf_values(const struct PtPsf *psf, double *values, size_t n);

/*
 Main-lobe full widths at half maximum.

 # Safety
 `psf` must be a live handle; outputs must be writable.
 */
enum PtStatus pt_psf_fwhm(const struct PtPsf *psf, double *out_lateral, double *out_axial);

/*
 Depth interval covered by the axial main lobe.

 # Safety
 `psf` must be a live handle; outputs must be writable.
 */
enum PtStatus pt_psf_axial_window(const struct PtPsf *psf, double *out_lo, double *out_hi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHOTOTHERM_H */
