#ifndef ROMEMBED_H
#define ROMEMBED_H

/* generated by cbindgen -- do not edit by hand */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum RomembedStatus {
  ROMEMBED_STATUS_OK = 0,
  ROMEMBED_STATUS_NULL_ARGUMENT = 1,
  ROMEMBED_STATUS_INVALID_UTF8 = 2,
  ROMEMBED_STATUS_COMPUTE_FAILED = 3,
  ROMEMBED_STATUS_INDEX_OUT_OF_RANGE = 4,
  ROMEMBED_STATUS_PANIC = 5,
} RomembedStatus;

/**
 * Opaque ROM handle: tridiagonal coefficients plus extracted grid weights.
 */
typedef struct RomembedModel RomembedModel;

/**
 * Opaque truth-medium handle.
 */
typedef struct RomembedProfile RomembedProfile;

/**
 * Opaque pole-residue data handle.
 */
typedef struct RomembedSpectral RomembedSpectral;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. Borrowed;
 * valid until the next failing call.
 */
const char *romembed_last_error(void);

/**
 * Release a string returned by this library.
 */
void romembed_string_free(char *s);

/**
 * Build a preset truth medium (constant | smooth-bump | smoothed-step |
 * bump-plus-reflector). Returns null on failure.
 */
struct RomembedProfile *romembed_profile_preset(const char *name);

/**
 * Parse a medium from its JSON description. Returns null on failure.
 */
struct RomembedProfile *romembed_profile_from_json(const char *json);

void romembed_profile_free(struct RomembedProfile *p);

/**
 * Impedance f(s) of the fine-grid forward model.
 */
enum RomembedStatus romembed_impedance(const struct RomembedProfile *profile,
                                       uintptr_t n_cells,
                                       double s_re,
                                       double s_im,
                                       double *f_re,
                                       double *f_im);

/**
 * Truncated spectral data of a bounded medium. Returns null on failure.
 */
struct RomembedSpectral *romembed_exact_spectrum(const struct RomembedProfile *profile,
                                                 uintptr_t n_cells,
                                                 uintptr_t n_pairs);

/**
 * Parse spectral data from `re_lambda,im_lambda,re_y,im_y` CSV text.
 */
struct RomembedSpectral *romembed_spectral_from_csv(const char *csv);

/**
 * Serialize spectral data to CSV; free with `romembed_string_free`.
 */
char *romembed_spectral_to_csv(const struct RomembedSpectral *data);

/**
 * Number of conjugate pole-residue pairs.
 */
uintptr_t romembed_spectral_n(const struct RomembedSpectral *data);

/**
 * Pole-residue sum at s.
 */
enum RomembedStatus romembed_spectral_eval(const struct RomembedSpectral *data,
                                           double s_re,
                                           double s_im,
                                           double *f_re,
                                           double *f_im);

void romembed_spectral_free(struct RomembedSpectral *data);

/**
 * Lanczos ROM and grid weights from spectral data. Null on breakdown.
 */
struct RomembedModel *romembed_model_build(const struct RomembedSpectral *data);

/**
 * Pair count n of the model.
 */
uintptr_t romembed_model_n(const struct RomembedModel *model);

/**
 * Grid weights of cell j (0-based, j < n).
 */
enum RomembedStatus romembed_model_weights(const struct RomembedModel *model,
                                           uintptr_t j,
                                           double *gamma_re,
                                           double *gamma_im,
                                           double *gamma_hat_re,
                                           double *gamma_hat_im);

/**
 * Transfer function of the tridiagonal form at s (diagonal included).
 */
enum RomembedStatus romembed_model_eval(const struct RomembedModel *model,
                                        double s_re,
                                        double s_im,
                                        double *f_re,
                                        double *f_im);

/**
 * Krein node j (0..=n): position and cumulative mass through node j.
 */
enum RomembedStatus romembed_model_krein_node(const struct RomembedModel *model,
                                              uintptr_t j,
                                              double *x,
                                              double *mass);

/**
 * Integrated loss pair i (0-based): primary loss at node i, dual loss at
 * the following segment midpoint (real parts).
 */
enum RomembedStatus romembed_model_loss(const struct RomembedModel *model,
                                        uintptr_t i,
                                        double *r,
                                        double *r_hat);

void romembed_model_free(struct RomembedModel *model);

/**
 * Passivity criteria over `count` points on [w_min, w_max] with shift
 * epsilon. Outputs: criterion flags (0/1) and the minimum sampled real
 * part.
 */
enum RomembedStatus romembed_check_passive(const struct RomembedSpectral *data,
                                           double w_min,
                                           double w_max,
                                           uintptr_t count,
                                           double epsilon,
                                           int32_t *stable_poles,
                                           int32_t *conjugate_symmetric,
                                           double *min_real_part);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROMEMBED_H */
