/* C interface of the stochastic damped nonlinear Schrödinger simulator.
 * Generated from the Rust sources by the sdnlse-ffi build script; do not
 * edit by hand. */

#ifndef SDNLSE_H
#define SDNLSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>


// Result code of every fallible C-ABI call. `Ok` is 0; on any other value
// the call's out-parameters are untouched and
// [`sdnlse_last_error_message`] describes the failure.
typedef enum {
  // Success.
  SDNLSE_STATUS_OK = 0,
  // A required pointer argument was NULL.
  SDNLSE_STATUS_NULL_ARGUMENT = 1,
  // A scalar argument was malformed (bad enum code, wrong buffer length,
  // zero denominator, non-finite value, oversized stream index).
  SDNLSE_STATUS_INVALID_ARGUMENT = 2,
  // The arguments describe an invalid configuration (e.g. σ ≤ 0, a noise
  // mode outside the grid, duplicate noise modes).
  SDNLSE_STATUS_CONFIG = 3,
  // The arguments are outside the mathematical domain of the query
  // (e.g. an exponent query in a dimension other than 1, 2, or 3).
  SDNLSE_STATUS_DOMAIN = 4,
  // A trajectory left the resolvable regime (non-finite or huge modulus).
  SDNLSE_STATUS_BLOW_UP = 5,
  // An input/output or serialization failure.
  SDNLSE_STATUS_IO = 6,
  // A Rust panic was caught at the boundary.
  SDNLSE_STATUS_PANIC = 7,
} SdnlseStatus;

// Splitting scheme selector for [`SdnlseParams::scheme`].
typedef enum {
  // First-order Lie splitting.
  SDNLSE_SCHEME_LIE = 0,
  // Second-order Strang splitting (the default in the TOML configs).
  SDNLSE_SCHEME_STRANG = 1,
} SdnlseScheme;

// Noise quadrature convention selector (how a mode's complex amplitude is
// split over independent real Gaussians).
typedef enum {
  // Two independent real Gaussians per mode (real and imaginary
  // quadratures), each with variance dt/2. Default.
  SDNLSE_NOISE_CONVENTION_TWO_PER_MODE = 0,
  // One complex Gaussian per mode of total variance dt.
  SDNLSE_NOISE_CONVENTION_ONE_PER_MODE = 1,
} SdnlseNoiseConvention;

// Which squared Hilbert–Schmidt norm of the noise operator to report.
typedef enum {
  // Into L²: the sum of squared mode amplitudes.
  SDNLSE_NOISE_SPACE_L2 = 0,
  // Into H¹: the L² part plus the gradient part.
  SDNLSE_NOISE_SPACE_H1 = 1,
  // The gradient part alone.
  SDNLSE_NOISE_SPACE_GRADIENT = 2,
} SdnlseNoiseSpace;

// Verdict of the parameter-assumption gate, written by
// [`sdnlse_check_assumptions`].
typedef enum {
  // All assumptions hold.
  SDNLSE_VERDICT_ADMISSIBLE = 0,
  // Assumptions hold but the run is outside the sup-norm regularity
  // regime (3-d defocusing with large σ).
  SDNLSE_VERDICT_ADMISSIBLE_WITH_FLAG = 1,
  // At least one assumption fails.
  SDNLSE_VERDICT_REJECTED = 2,
} SdnlseVerdict;

// Opaque periodic-grid handle. Create with [`sdnlse_grid_new`], release
// with [`sdnlse_grid_free`].
typedef struct SdnlseGrid SdnlseGrid;

// Opaque noise-operator handle. Create with [`sdnlse_noise_new`], release
// with [`sdnlse_noise_free`].
typedef struct SdnlseNoise SdnlseNoise;

// Opaque trajectory-state handle (field, clock, and the path's RNG).
// Create with [`sdnlse_state_new`] or [`sdnlse_state_new_gaussian`],
// release with [`sdnlse_state_free`].
typedef struct SdnlseState SdnlseState;

// Simulation parameters (mirror of the native parameter set).
//
// `scheme` takes [`SdnlseScheme`] values. `log_every` and `seed` exist for
// parity with the native struct; the C stepping API reads observables on
// demand and draws randomness from the state handle, so they only need to
// be valid (`log_every` ≥ 1).
typedef struct {
  // Damping rate λ ≥ 0.
  double lambda;
  // Nonlinearity exponent σ > 0.
  double sigma;
  // Nonlinearity sign: +1 focusing, −1 defocusing.
  double alpha;
  // Time step, > 0.
  double dt;
  // Absolute end time for [`sdnlse_evolve`], ≥ 0.
  double t_final;
  // Splitting scheme: an [`SdnlseScheme`] value.
  int32_t scheme;
  // Logging stride of the native integrator; must be ≥ 1.
  uint64_t log_every;
  // Master seed recorded alongside the native parameter set.
  uint64_t seed;
} SdnlseParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the description of the calling thread's most recent failure into
// `buf` (NUL-terminated, truncated to `cap` bytes including the NUL).
// Returns the full message length in bytes, excluding the NUL; call with
// `buf == NULL` or `cap == 0` to query the length alone. The message is
// replaced by the next failing call on the same thread.
//
// # Safety
// `buf` must be NULL or valid for `cap` byte writes.
size_t sdnlse_last_error_message(char *buf, size_t cap);

// Version of the library as a static NUL-terminated string
// (never NULL; do not free).
const char *sdnlse_version(void);

// Create a periodic grid: `d` ∈ {1, 2, 3} axes, `n` ≥ 2 points per axis,
// box side length `len` > 0. Writes the handle to `*out`.
//
// # Safety
// `out` must be valid for writes.
SdnlseStatus sdnlse_grid_new(size_t d, size_t n, double len, SdnlseGrid **out);

// Release a grid handle (NULL is a no-op).
//
// # Safety
// `grid` must be NULL or a pointer from [`sdnlse_grid_new`], not yet freed.
void sdnlse_grid_free(SdnlseGrid *grid);

// Number of axes of the grid.
//
// # Safety
// `grid` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_grid_dimension(const SdnlseGrid *grid, size_t *out);

// Points per axis of the grid.
//
// # Safety
// `grid` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_grid_points_per_axis(const SdnlseGrid *grid, size_t *out);

// Total number of sample points (n^d); the length unit for field buffers.
//
// # Safety
// `grid` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_grid_total_points(const SdnlseGrid *grid, size_t *out);

// Create a noise operator from `n_entries` forced Fourier modes.
//
// `modes` holds `n_entries × d` integers, row-major (one `d`-vector of mode
// indices per entry); `amps_re` holds the real parts of the amplitudes and
// `amps_im` (NULL for all-real amplitudes) the imaginary parts.
// `convention` takes [`SdnlseNoiseConvention`] values. Writes the handle to
// `*out`.
//
// # Safety
// `grid` must be a live handle; `modes` and `amps_re` must hold
// `n_entries × d` and `n_entries` readable elements; `amps_im` must be NULL
// or hold `n_entries` readable elements; `out` must be valid for writes.
SdnlseStatus sdnlse_noise_new(const SdnlseGrid *grid,
                              const int64_t *modes,
                              const double *amps_re,
                              const double *amps_im,
                              size_t n_entries,
                              int32_t convention,
                              SdnlseNoise **out);

// Release a noise handle (NULL is a no-op).
//
// # Safety
// `noise` must be NULL or a pointer from [`sdnlse_noise_new`], not yet freed.
void sdnlse_noise_free(SdnlseNoise *noise);

// Squared Hilbert–Schmidt norm of the operator into the space selected by
// `space` (an [`SdnlseNoiseSpace`] value).
//
// # Safety
// `noise` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_noise_norm_sq(const SdnlseNoise *noise, int32_t space, double *out);

// Create a trajectory state at t = 0.
//
// `re`/`im` supply the initial samples in grid order: both NULL gives the
// zero field (`values_len` must then be 0 or `total_points`); `im` alone
// may be NULL for a real field; when a buffer is present, `values_len`
// must equal `total_points`. The state's noise realization is drawn from
// the deterministic stream (`seed`, `stream`); `stream` must be < 2^56.
//
// # Safety
// `grid` must be a live handle; non-NULL `re`/`im` must hold `values_len`
// readable elements; `out` must be valid for writes.
SdnlseStatus sdnlse_state_new(const SdnlseGrid *grid,
                              const double *re,
                              const double *im,
                              size_t values_len,
                              uint64_t seed,
                              uint64_t stream,
                              SdnlseState **out);

// Create a trajectory state at t = 0 whose field is a centered Gaussian
// bump of the given width and peak amplitude. `stream` must be < 2^56.
//
// # Safety
// `grid` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_new_gaussian(const SdnlseGrid *grid,
                                       double width,
                                       double amplitude,
                                       uint64_t seed,
                                       uint64_t stream,
                                       SdnlseState **out);

// Duplicate a state handle, including its clock and RNG position. The
// clone continues with the identical noise realization.
//
// # Safety
// `state` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_clone(const SdnlseState *state, SdnlseState **out);

// Release a state handle (NULL is a no-op).
//
// # Safety
// `state` must be NULL or a pointer from a state constructor, not yet freed.
void sdnlse_state_free(SdnlseState *state);

// Current time of the state's clock.
//
// # Safety
// `state` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_time(const SdnlseState *state, double *out);

// Number of steps taken so far.
//
// # Safety
// `state` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_step_count(const SdnlseState *state, uint64_t *out);

// Copy the field samples out in grid order. Each of `out_re`/`out_im` may
// be NULL to skip that part (not both); a non-NULL buffer receives
// `values_len` doubles, and `values_len` must equal `total_points`.
//
// # Safety
// `state` must be a live handle; non-NULL `out_re`/`out_im` must be valid
// for `values_len` writes.
SdnlseStatus sdnlse_state_values(const SdnlseState *state,
                                 double *out_re,
                                 double *out_im,
                                 size_t values_len);

// Squared L² norm of the field (the mass observable).
//
// # Safety
// `state` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_mass(const SdnlseState *state, double *out);

// Hamiltonian energy of the field for nonlinearity (σ, α).
//
// # Safety
// `state` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_energy(const SdnlseState *state, double sigma, double alpha, double *out);

// Squared H¹ norm of the field (mass plus squared gradient norm).
//
// # Safety
// `state` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_h1_norm_sq(const SdnlseState *state, double *out);

// Squared L² norm of the field's gradient.
//
// # Safety
// `state` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_gradient_norm_sq(const SdnlseState *state, double *out);

// Sup norm (largest sample modulus) of the field.
//
// # Safety
// `state` must be a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_state_sup_norm(const SdnlseState *state, double *out);

// Advance the state by one time step of `params.dt`, drawing the noise
// increment (if `noise` is non-NULL) from the state's own RNG.
//
// # Safety
// `state` and `params` must be live; `noise` must be NULL or a live handle
// on the same grid.
SdnlseStatus sdnlse_step(SdnlseState *state, const SdnlseParams *params, const SdnlseNoise *noise);

// Integrate the state forward to the absolute time `params.t_final`
// (rounded to the nearest whole number of steps from the state's current
// clock; a `t_final` at or before the clock is a no-op). On blow-up the
// state keeps the last values it reached and the call reports
// [`SdnlseStatus::BlowUp`].
//
// # Safety
// `state` and `params` must be live; `noise` must be NULL or a live handle
// on the same grid.
SdnlseStatus sdnlse_evolve(SdnlseState *state,
                           const SdnlseParams *params,
                           const SdnlseNoise *noise);

// Exact mean mass at time `t` for initial mass `m0`, damping `lambda`, and
// the given noise operator (NULL for no forcing):
// `m0·e^{−2λt} + ‖Φ‖²·(1 − e^{−2λt})/(2λ)`, with the λ → 0 limit taken
// exactly.
//
// # Safety
// `noise` must be NULL or a live handle; `out` must be valid for writes.
SdnlseStatus sdnlse_exact_mean_mass(double t,
                                    double m0,
                                    double lambda,
                                    const SdnlseNoise *noise,
                                    double *out);

// The integrability exponent used by the fixed-point smoothing estimate in
// dimension `d` for nonlinearity exponent σ = `sigma_num`/`sigma_den`
// (denominator nonzero). Writes the result as an exact reduced fraction.
//
// # Safety
// `out_num` and `out_den` must be valid for writes.
SdnlseStatus sdnlse_smoothing_exponent(size_t d,
                                       int64_t sigma_num,
                                       int64_t sigma_den,
                                       int64_t *out_num,
                                       int64_t *out_den);

// Whether (p, r) = (`p_num`/`p_den`, `r_num`/`r_den`) is an admissible
// space-time exponent pair in dimension `d`. A denominator of 0 encodes ∞.
// Writes 1 (admissible) or 0 to `*out`.
//
// # Safety
// `out` must be valid for writes.
SdnlseStatus sdnlse_pair_admissible(size_t d,
                                    int64_t p_num,
                                    int64_t p_den,
                                    int64_t r_num,
                                    int64_t r_den,
                                    int32_t *out);

// Run the parameter-assumption gate on (d, σ = `sigma_num`/`sigma_den`,
// α). Writes an [`SdnlseVerdict`] value to `*out`; a rejection is still
// [`SdnlseStatus::Ok`] (the query itself succeeded) — only malformed
// arguments produce a non-zero status.
//
// # Safety
// `out` must be valid for writes.
SdnlseStatus sdnlse_check_assumptions(size_t d,
                                      int64_t sigma_num,
                                      int64_t sigma_den,
                                      double alpha,
                                      int32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDNLSE_H */
