#ifndef RABBITT_H
#define RABBITT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Sideband within a three-sideband group.
 */
typedef enum RabbittBand {
  RABBITT_BAND_LOWER = 0,
  RABBITT_BAND_CENTER = 1,
  RABBITT_BAND_HIGHER = 2,
} RabbittBand;

/**
 * Status codes. The nonzero library codes match the CLI exit codes.
 */
typedef enum RabbittStatus {
  RABBITT_STATUS_OK = 0,
  RABBITT_STATUS_CONFIG_ERROR = 2,
  RABBITT_STATUS_PRECONDITION_ERROR = 3,
  RABBITT_STATUS_NUMERICAL_ERROR = 4,
  RABBITT_STATUS_NULL_POINTER = 10,
  RABBITT_STATUS_INVALID_ARGUMENT = 11,
  RABBITT_STATUS_PANIC = 12,
} RabbittStatus;

/**
 * Opaque delay scan.
 */
typedef struct RabbittScan RabbittScan;

/**
 * Result of a cosine-plus-quadratic fit.
 */
typedef struct RabbittFit {
  double energy;
  double i0;
  double c1;
  double c2;
  double i1;
  double phase;
  double residual_rms;
  double phase_err;
} RabbittFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rabbitt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rabbitt_version(void);

/**
 * Principal-branch `log Γ(re + i·im)`.
 */
enum RabbittStatus rabbitt_log_gamma(double re, double im, double *out_re, double *out_im);

/**
 * Continuum–continuum phase for the transition `kappa → k` (unwrapped).
 */
enum RabbittStatus rabbitt_cc_phase(double k,
                                    double kappa,
                                    double z,
                                    bool antisymmetrize,
                                    double *result);

/**
 * Coulomb phase `arg Γ(λ + 1 − iZ/κ)` in `(−π, π]`.
 */
enum RabbittStatus rabbitt_coulomb_phase(uint32_t lambda, double kappa, double z, double *result);

/**
 * Atomic phase of one band of group `q`, wrapped to `(−π, π]`.
 * `band`: 0 lower, 1 center, 2 higher. `ip` in a.u.
 */
enum RabbittStatus rabbitt_atomic_phase_3sb(uint32_t q,
                                            double wavelength_nm,
                                            double ip,
                                            double z,
                                            uint32_t lambda,
                                            int32_t band,
                                            bool antisymmetrize,
                                            double *result);

/**
 * Fits `I0 + c1·τ + c2·τ² + I1·cos(freq·τ − φ)` to `n` samples.
 */
enum RabbittStatus rabbitt_fit_oscillation(const double *tau,
                                           const double *signal,
                                           size_t n,
                                           double freq,
                                           struct RabbittFit *result);

/**
 * Parses a delay-scan container.
 */
enum RabbittStatus rabbitt_scan_from_json(const char *json, struct RabbittScan **scan);

/**
 * Synthesizes a scan from a synth configuration (JSON, schema_version 1).
 */
enum RabbittStatus rabbitt_synth_from_json(const char *config,
                                           uint64_t seed,
                                           struct RabbittScan **scan);

/**
 * Releases a scan; null is ignored.
 */
void rabbitt_scan_free(struct RabbittScan *scan);

/**
 * Number of delays and energies of a scan.
 */
enum RabbittStatus rabbitt_scan_shape(const struct RabbittScan *scan,
                                      size_t *n_delay,
                                      size_t *n_energy);

/**
 * Copies the axes (a.u.) and the row-major signal into caller buffers of the
 * sizes reported by [`rabbitt_scan_shape`]. Any pointer may be null to skip it.
 */
enum RabbittStatus rabbitt_scan_copy(const struct RabbittScan *scan,
                                     double *delay,
                                     double *energy,
                                     double *signal);

/**
 * Serializes a scan; free the string with [`rabbitt_string_free`].
 */
enum RabbittStatus rabbitt_scan_to_json(const struct RabbittScan *scan, char **json);

/**
 * Releases a string returned by this library; null is ignored.
 */
void rabbitt_string_free(char *s);

/**
 * Integrates and fits one sideband of group `q` (window in eV).
 */
enum RabbittStatus rabbitt_scan_fit_band(const struct RabbittScan *scan,
                                         uint32_t q,
                                         int32_t band,
                                         double window_ev,
                                         struct RabbittFit *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RABBITT_H */
