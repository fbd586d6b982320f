#ifndef SPINPHASE_H
#define SPINPHASE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_POINTER = 1,
  SP_STATUS_DOMAIN = 2,
  SP_STATUS_CONDITIONING = 3,
  SP_STATUS_INTEGRITY = 4,
  SP_STATUS_CONTRACT = 5,
  SP_STATUS_IO = 6,
  SP_STATUS_PARSE = 7,
  /**
   * Output buffer has the wrong length.
   */
  SP_STATUS_BUFFER_SIZE = 8,
  SP_STATUS_PANIC = 9,
} SpStatus;

/**
 * Density matrix handle.
 */
typedef struct SpDensity SpDensity;

/**
 * Spherical-harmonic expansion handle.
 */
typedef struct SpFunction SpFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Density matrix |ψ⟩⟨ψ| from `len` interleaved amplitudes (2·len doubles).
 *
 * # Safety
 * `amplitudes` must point to 2·`len` readable doubles and `out` to a
 * writable handle slot.
 */
enum SpStatus sp_density_from_pure(int32_t twice_j,
                                   const double *amplitudes,
                                   size_t len,
                                   struct SpDensity **out);

/**
 * Hilbert-Schmidt random density matrix.
 *
 * # Safety
 * `out` must point to a writable handle slot.
 */
enum SpStatus sp_density_random_hs(int32_t twice_j, uint64_t seed, struct SpDensity **out);

/**
 * # Safety
 * `rho` must be null or a handle from this library, not yet freed.
 */
void sp_density_free(struct SpDensity *rho);

/**
 * 2J + 1, or 0 for a null handle.
 *
 * # Safety
 * `rho` must be null or a live handle.
 */
size_t sp_density_dim(const struct SpDensity *rho);

/**
 * F_ρ(θ, φ; s) from the parity operator.
 *
 * # Safety
 * `rho` must be a live handle and `out` writable.
 */
enum SpStatus sp_eval_direct(const struct SpDensity *rho,
                             double s,
                             double theta,
                             double phi,
                             double *out);

/**
 * Stern-Gerlach probabilities p_m(θ, φ), m = J..−J; `len` must be 2J + 1.
 *
 * # Safety
 * `rho` must be a live handle and `out` must hold `len` doubles.
 */
enum SpStatus sp_probabilities(const struct SpDensity *rho,
                               double theta,
                               double phi,
                               double *out,
                               size_t len);

/**
 * Parity diagonal [M_s]_mm, m = J..−J; `len` must be 2J + 1.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum SpStatus sp_parity_diag(int32_t twice_j, double s, double *out, size_t len);

/**
 * Coefficients of F_ρ(·, s).
 *
 * # Safety
 * `rho` must be a live handle and `out` a writable handle slot.
 */
enum SpStatus sp_coeffs(const struct SpDensity *rho, double s, struct SpFunction **out);

/**
 * Number of complex coefficients, (2J + 1)², or 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
size_t sp_function_coeff_count(const struct SpFunction *f);

/**
 * Copies the coefficients as interleaved doubles; `len` counts doubles.
 *
 * # Safety
 * `f` must be a live handle and `out` must hold `len` doubles.
 */
enum SpStatus sp_function_coeffs(const struct SpFunction *f, double *out, size_t len);

/**
 * Series value Σ c_jm Y_jm(θ, φ).
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum SpStatus sp_function_eval(const struct SpFunction *f, double theta, double phi, double *out);

/**
 * Convolution with the spin-up kernel of parameter `s_prime`; the result
 * has parameter s + s' − 1.
 *
 * # Safety
 * `f` must be a live handle and `out` a writable handle slot.
 */
enum SpStatus sp_function_transform_s(const struct SpFunction *f,
                                      double s_prime,
                                      struct SpFunction **out);

/**
 * Great-circle (Funk) transform.
 *
 * # Safety
 * `f` must be a live handle and `out` a writable handle slot.
 */
enum SpStatus sp_function_radon(const struct SpFunction *f, struct SpFunction **out);

/**
 * # Safety
 * `f` must be null or a handle from this library, not yet freed.
 */
void sp_function_free(struct SpFunction *f);

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to fit. Returns the full length in bytes without the NUL, so
 * a call with `len` = 0 sizes the buffer.
 *
 * # Safety
 * `buf` must hold `len` bytes, or be null when `len` is 0.
 */
size_t sp_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINPHASE_H */
