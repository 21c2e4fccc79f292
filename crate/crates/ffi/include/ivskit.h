/* ivskit C API — generated by cbindgen, do not edit by hand. */

#ifndef IVSKIT_H
#define IVSKIT_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IvsKitStatus {
  IVS_KIT_STATUS_OK = 0,
  IVS_KIT_STATUS_NULL_ARGUMENT = 1,
  IVS_KIT_STATUS_INVALID_ARGUMENT = 2,
  IVS_KIT_STATUS_UTF8_ERROR = 3,
  IVS_KIT_STATUS_IO_ERROR = 4,
  IVS_KIT_STATUS_PARSE_ERROR = 5,
  /**
   * The run finished but produced flagged-degenerate records.
   */
  IVS_KIT_STATUS_DEGENERATE = 6,
  IVS_KIT_STATUS_INTERNAL_ERROR = 7,
} IvsKitStatus;

/**
 * Opaque result of a full IVS run.
 */
typedef struct IvsKitReport IvsKitReport;

/**
 * One thermocouple reading plus rig geometry. Temperatures in degC,
 * lengths in m, k in W/(m K).
 */
typedef struct IvsKitThermoSample {
  double t1;
  double t2;
  double t3;
  double t_sat;
  double u_t;
  double dx;
  double u_dx;
  double l;
  double k_cu;
} IvsKitThermoSample;

/**
 * Reduced quantities; undefined values are NaN.
 */
typedef struct IvsKitThermalResult {
  double q_wcm2;
  double t_w_c;
  double dt_wall_c;
  double h_wcm2k;
  double u_dt_star_c;
  double u_q_wcm2;
  double u_dt_wall_c;
  double u_h_wcm2k;
} IvsKitThermalResult;

/**
 * Scalar view of one IVS record.
 */
typedef struct IvsKitIvsRecord {
  double q_mid;
  double delta_q;
  double morph_raw;
  double morph_norm;
  double phys;
  double ivs;
  uintptr_t n_trials;
  uintptr_t n_flags;
  bool degenerate;
} IvsKitIvsRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or NULL when none was recorded.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *ivskit_last_error_message(void);

/**
 * Toolkit version as a static string.
 */
const char *ivskit_version(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by an ivskit function and not freed yet.
 */
void ivskit_string_free(char *s);

/**
 * Fourier-law reduction with RSS uncertainty propagation.
 *
 * # Safety
 * `sample` and `out` must be valid, aligned, non-null pointers.
 */
enum IvsKitStatus ivskit_thermal_reduce(const struct IvsKitThermoSample *sample,
                                        struct IvsKitThermalResult *out);

/**
 * φ over an h series: phi_out[i] = max_j(Δh_j) − Δh_i, NaN at i = 0.
 * `u_h` and `u_phi_out` may be NULL to skip uncertainty propagation.
 *
 * # Safety
 * `h` and `phi_out` must point to `n` readable/writable doubles; when
 * non-null, `u_h`/`u_phi_out` likewise.
 */
enum IvsKitStatus ivskit_phi_series(const double *h,
                                    const double *u_h,
                                    uintptr_t n,
                                    double *phi_out,
                                    double *u_phi_out);

/**
 * Physical similarity 100 − |a_n − a_n1|·100/a_n. A zero denominator
 * reports `Degenerate` and writes 0.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum IvsKitStatus ivskit_physical_similarity(double a_n, double a_n1, double *out);

/**
 * Morphological pair score between two image files (lower heat flux
 * first) with default SIFT/matching parameters.
 *
 * # Safety
 * Paths must be valid NUL-terminated strings; `score_out` non-null.
 */
enum IvsKitStatus ivskit_pair_score(const char *img_a, const char *img_b, double *score_out);

/**
 * Runs the IVS pipeline over a manifest file.
 *
 * `out_dir` may be NULL (no CSV written) or a directory to receive
 * `ivs.csv`. `seed`/`trials` override the manifest when `use_seed` /
 * `trials > 0`. `jobs = 0` uses all logical cores; the worker count
 * never changes results. Returns NULL on error with `*status` set; a
 * non-NULL report with `*status == Degenerate` means the run finished
 * but carries flagged-degenerate records.
 *
 * # Safety
 * `manifest_path` must be a valid NUL-terminated string; `status`
 * non-null; `out_dir` NULL or valid.
 */
struct IvsKitReport *ivskit_run_ivs(const char *manifest_path,
                                    const char *out_dir,
                                    uint64_t seed,
                                    bool use_seed,
                                    uintptr_t trials,
                                    uintptr_t jobs,
                                    enum IvsKitStatus *status);

/**
 * Number of records in a report.
 *
 * # Safety
 * `report` must be a live handle from [`ivskit_run_ivs`].
 */
uintptr_t ivskit_report_len(const struct IvsKitReport *report);

/**
 * Copies record `index` into `out`.
 *
 * # Safety
 * `report` must be a live handle; `out` non-null.
 */
enum IvsKitStatus ivskit_report_record(const struct IvsKitReport *report,
                                       uintptr_t index,
                                       struct IvsKitIvsRecord *out);

/**
 * Returns record `index`'s flags joined with ';' (empty string when
 * unflagged), or NULL on error. Free with [`ivskit_string_free`].
 *
 * # Safety
 * `report` must be a live handle.
 */
char *ivskit_report_flags(const struct IvsKitReport *report, uintptr_t index);

/**
 * Frees a report handle.
 *
 * # Safety
 * `report` must come from [`ivskit_run_ivs`] and not be freed twice.
 */
void ivskit_report_free(struct IvsKitReport *report);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* IVSKIT_H */
