/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef FEATDP_H
#define FEATDP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FeatdpStatus {
  FEATDP_STATUS_OK = 0,
  FEATDP_STATUS_NULL_POINTER = 1,
  FEATDP_STATUS_INVALID_ARGUMENT = 2,
  FEATDP_STATUS_CONFIG = 3,
  FEATDP_STATUS_DIMENSION = 4,
  FEATDP_STATUS_DEGENERATE = 5,
  FEATDP_STATUS_INFEASIBLE = 6,
  FEATDP_STATUS_REGIME = 7,
  FEATDP_STATUS_INTERNAL = 8,
} FeatdpStatus;

/**
 * Experiment configuration handle.
 */
typedef struct FeatdpConfig FeatdpConfig;

/**
 * Sampled encoder matrix handle.
 */
typedef struct FeatdpEncoder FeatdpEncoder;

typedef struct FeatdpCalibration {
  double sigma2;
  double sensitivity;
  double c_w;
  double d_z;
} FeatdpCalibration;

typedef struct FeatdpMinimax {
  double nu2;
  double bound;
  double gamma_star;
} FeatdpMinimax;

typedef struct FeatdpServerBound {
  double approx_term;
  double privacy_term;
  double channel_term;
  double total;
} FeatdpServerBound;

/**
 * Mean and standard error of each per-trial metric.
 */
typedef struct FeatdpTrialStats {
  size_t trials;
  double server_z_mean;
  double server_f_mean;
  double server_f_stderr;
  double adversary_z_mean;
  double adversary_z_stderr;
  double adversary_f_mean;
  double accuracy_mean;
  /**
   * Closed-form minimax bound, NaN when undefined.
   */
  double bound_adversary;
  double bound_server;
  double bound_accuracy;
} FeatdpTrialStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *featdp_last_error(void);

/**
 * New configuration with default values.
 */
struct FeatdpConfig *featdp_config_new(void);

/**
 * # Safety
 * `cfg` must come from [`featdp_config_new`] and not be used afterwards.
 */
void featdp_config_free(struct FeatdpConfig *cfg);

/**
 * Assign one key using the config-file syntax.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum FeatdpStatus featdp_config_set(struct FeatdpConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum FeatdpStatus featdp_config_validate(const struct FeatdpConfig *cfg);

/**
 * Draw an `r x d` Laplace(0, b) encoder.
 *
 * # Safety
 * `out` must be writable.
 */
enum FeatdpStatus featdp_encoder_sample(size_t r,
                                        size_t d,
                                        double b,
                                        uint64_t seed,
                                        struct FeatdpEncoder **out);

/**
 * # Safety
 * `enc` must come from [`featdp_encoder_sample`] and not be used afterwards.
 */
void featdp_encoder_free(struct FeatdpEncoder *enc);

/**
 * Shape of the encoder.
 *
 * # Safety
 * `enc` must be a live handle; `rows` and `cols` writable.
 */
enum FeatdpStatus featdp_encoder_shape(const struct FeatdpEncoder *enc, size_t *rows, size_t *cols);

/**
 * Copy the entries in row-major order into `buf` of length `len = r * d`.
 *
 * # Safety
 * `enc` must be a live handle; `buf` must hold `len` doubles.
 */
enum FeatdpStatus featdp_encoder_entries(const struct FeatdpEncoder *enc, double *buf, size_t len);

/**
 * Largest singular value.
 *
 * # Safety
 * `enc` must be a live handle; `out` writable.
 */
enum FeatdpStatus featdp_encoder_spectral_norm(const struct FeatdpEncoder *enc, double *out);

/**
 * `z = W f` for `f` of length `d`, written to `z` of length `r`.
 *
 * # Safety
 * `enc` must be a live handle; `f` must hold `d` doubles and `z` `r`.
 */
enum FeatdpStatus featdp_encoder_apply(const struct FeatdpEncoder *enc,
                                       const double *f,
                                       size_t d,
                                       double *z,
                                       size_t r);

/**
 * Noise calibration for `(epsilon, delta)` and an `r x d` encoder.
 *
 * # Safety
 * `out` must be writable.
 */
enum FeatdpStatus featdp_calibrate(double epsilon,
                                   double delta,
                                   size_t r,
                                   size_t d,
                                   double b,
                                   double clip_norm,
                                   struct FeatdpCalibration *out);

/**
 * Minimax adversary MSE for a given effective noise `nu2`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FeatdpStatus featdp_minimax_bound(double g,
                                       double alpha,
                                       double d_z,
                                       size_t r,
                                       double nu2,
                                       struct FeatdpMinimax *out);

/**
 * Multi-antenna adversary bound.
 *
 * # Safety
 * `out` must be writable.
 */
enum FeatdpStatus featdp_mimo_bound(size_t r,
                                    double alpha,
                                    double sigma2,
                                    double sigma_a2,
                                    double c_z2,
                                    size_t antennas,
                                    double *out);

/**
 * `max(0, p0 (1 - mse / margin^2))`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FeatdpStatus featdp_accuracy_lower_bound(double p0, double mse, double margin, double *out);

/**
 * Smallest `r` whose minimax bound reaches `omega` with `nu2` and `d_z`
 * held fixed.
 *
 * # Safety
 * `out` must be writable.
 */
enum FeatdpStatus featdp_optimal_dim_explicit(double g,
                                              double alpha,
                                              double d_z,
                                              double nu2,
                                              double omega,
                                              size_t *out);

/**
 * Smallest `r` in `[1, r_max]` reaching `omega` with the calibration
 * recomputed at every `r`. Uses the config's budget, encoder and channel
 * parameters.
 *
 * # Safety
 * `cfg` must be a live handle; `out` writable.
 */
enum FeatdpStatus featdp_optimal_dim_consistent(const struct FeatdpConfig *cfg, size_t *out);

/**
 * Three-term server MSE bound for the config's encoder draw, pseudo-inverse
 * decoder and `||f||^2 = C_f^2`.
 *
 * # Safety
 * `cfg` must be a live handle; `out` writable.
 */
enum FeatdpStatus featdp_server_bound(const struct FeatdpConfig *cfg,
                                      struct FeatdpServerBound *out);

/**
 * Monte Carlo trials for the config, with the matching closed forms.
 *
 * # Safety
 * `cfg` must be a live handle; `out` writable.
 */
enum FeatdpStatus featdp_run_trials(const struct FeatdpConfig *cfg, struct FeatdpTrialStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEATDP_H */
