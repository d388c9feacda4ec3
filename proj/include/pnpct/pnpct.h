/* Plug-and-play CT reconstruction: C interface.
 *
 * All functions return a pnpct_status; on failure pnpct_last_error() describes the
 * problem (per thread, valid until the next call on that thread). Handles are opaque
 * and owned by the caller, who releases them with the matching *_destroy function.
 * Distinct handles may be used from different threads concurrently. */
#ifndef PNPCT_PNPCT_H
#define PNPCT_PNPCT_H

#include <stddef.h>
#include <stdint.h>

#if defined(PNPCT_BUILDING)
#define PNPCT_API __attribute__((visibility("default")))
#else
#define PNPCT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pnpct_status {
  PNPCT_OK = 0,
  PNPCT_ERR_INVALID_ARGUMENT = 1,
  PNPCT_ERR_SHAPE_MISMATCH = 2,
  PNPCT_ERR_IO = 3,
  PNPCT_ERR_FORMAT = 4,
  PNPCT_ERR_CONFIG = 5,
  PNPCT_ERR_NON_FINITE = 6,
  PNPCT_ERR_STALLED = 7,   /* data-consistency ratio undefined (no movement) */
  PNPCT_ERR_BREAKDOWN = 8, /* inner solver breakdown */
  PNPCT_ERR_RUNTIME = 9,
  PNPCT_ERR_NULL = 10      /* a required pointer argument was NULL */
} pnpct_status;

PNPCT_API const char* pnpct_last_error(void);
PNPCT_API const char* pnpct_version(void);
PNPCT_API const char* pnpct_status_name(pnpct_status s);

/* ---- images (row-major doubles) ---- */
typedef struct pnpct_image pnpct_image;

/* data may be NULL for a zero image */
PNPCT_API pnpct_status pnpct_image_create(size_t width, size_t height, const double* data,
                                          pnpct_image** out);
PNPCT_API void pnpct_image_destroy(pnpct_image* img);
PNPCT_API size_t pnpct_image_width(const pnpct_image* img);
PNPCT_API size_t pnpct_image_height(const pnpct_image* img);
PNPCT_API const double* pnpct_image_data(const pnpct_image* img);
PNPCT_API pnpct_status pnpct_shepp_logan(size_t n, pnpct_image** out);
/* format chosen by extension: .pgm (16-bit, [0,1] clipped) or .raw (float64 LE + .json) */
PNPCT_API pnpct_status pnpct_image_write(const pnpct_image* img, const char* path);
PNPCT_API pnpct_status pnpct_image_read(const char* path, pnpct_image** out);

/* ---- fan-beam projector ---- */
typedef struct pnpct_geometry {
  size_t image_size;
  size_t num_angles;
  size_t rays_per_angle;
  double source_distance; /* pixel units */
  double detector_width;  /* pixel units */
} pnpct_geometry;

/* rays_per_angle == 0 picks the default */
PNPCT_API pnpct_status pnpct_geometry_defaults(size_t image_size, size_t num_angles,
                                               size_t rays_per_angle, pnpct_geometry* out);

typedef struct pnpct_operator pnpct_operator;

PNPCT_API pnpct_status pnpct_operator_create(const pnpct_geometry* g, pnpct_operator** out);
PNPCT_API void pnpct_operator_destroy(pnpct_operator* op);
PNPCT_API pnpct_status pnpct_operator_shape(const pnpct_operator* op, size_t* rows, size_t* cols,
                                            size_t* nnz);
PNPCT_API pnpct_status pnpct_operator_apply(const pnpct_operator* op, const double* x, size_t nx,
                                            double* y, size_t ny);
PNPCT_API pnpct_status pnpct_operator_adjoint(const pnpct_operator* op, const double* y,
                                              size_t ny, double* x, size_t nx);
/* out = b + e with ||e|| = level ||b||; out may alias b */
PNPCT_API pnpct_status pnpct_add_noise(const double* b, size_t m, double level, uint64_t seed,
                                       double* out);

/* ---- denoisers ---- */
typedef struct pnpct_denoiser pnpct_denoiser;

/* JSON description as in the "denoiser" block of a run config; relative weight paths
 * resolve against base_dir (may be NULL for the working directory). */
PNPCT_API pnpct_status pnpct_denoiser_from_json(const char* json, const char* base_dir,
                                                pnpct_denoiser** out);
PNPCT_API void pnpct_denoiser_destroy(pnpct_denoiser* d);
/* Writes a description into buf (truncated to cap, always NUL terminated). */
PNPCT_API pnpct_status pnpct_denoiser_describe(const pnpct_denoiser* d, char* buf, size_t cap);
PNPCT_API pnpct_status pnpct_denoiser_apply(const pnpct_denoiser* d, const pnpct_image* in,
                                            pnpct_image** out);

/* ---- metrics ---- */
/* mse is the relative l2 error; psnr uses peak 1 (inf for a perfect match). Any output
 * pointer may be NULL. */
PNPCT_API pnpct_status pnpct_metrics(const pnpct_image* x, const pnpct_image* ref, double* mse,
                                     double* psnr, double* ssim);

/* ---- experiments ---- */
typedef struct pnpct_row {
  size_t k;
  double mse, psnr, ssim, d_err, s_err, dc, alpha;
  int descent_ok;
} pnpct_row;

typedef struct pnpct_run pnpct_run;

/* Returns PNPCT_OK for a valid file; otherwise PNPCT_ERR_CONFIG (or IO) and a
 * newline separated list of problems in report. report may be NULL. */
PNPCT_API pnpct_status pnpct_config_validate(const char* path, char* report, size_t cap);

/* Runs a config file and writes its artifacts. output_dir may be NULL. Config problems
 * return PNPCT_ERR_CONFIG with no handle. A run that aborts on a non-finite iterate
 * still produces a handle holding the partial record and returns PNPCT_ERR_NON_FINITE. */
PNPCT_API pnpct_status pnpct_run_config(const char* path, const char* output_dir,
                                        pnpct_run** out);
PNPCT_API void pnpct_run_destroy(pnpct_run* r);
PNPCT_API size_t pnpct_run_rows(const pnpct_run* r);
PNPCT_API pnpct_status pnpct_run_row(const pnpct_run* r, size_t i, pnpct_row* out);
PNPCT_API size_t pnpct_run_selected_k(const pnpct_run* r);
PNPCT_API const char* pnpct_run_stop_reason(const pnpct_run* r);
PNPCT_API const char* pnpct_run_output_dir(const pnpct_run* r);
/* images owned by the run handle */
PNPCT_API const pnpct_image* pnpct_run_selected(const pnpct_run* r);
PNPCT_API const pnpct_image* pnpct_run_final(const pnpct_run* r);

PNPCT_API pnpct_status pnpct_denoise_bench(const char* path, const char* output_dir);

#ifdef __cplusplus
}
#endif

#endif
