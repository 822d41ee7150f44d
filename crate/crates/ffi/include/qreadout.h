#ifndef QREADOUT_H
#define QREADOUT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum QrStatus {
  QR_STATUS_OK = 0,
  QR_STATUS_NULL_POINTER = 1,
  QR_STATUS_VALIDATION = 2,
  QR_STATUS_DOMAIN = 3,
  QR_STATUS_INSUFFICIENT_DATA = 4,
  QR_STATUS_DEGENERATE_DATA = 5,
  QR_STATUS_FIT_FAILURE = 6,
  QR_STATUS_FIT_DOMAIN = 7,
  QR_STATUS_NOT_APPLICABLE = 8,
  QR_STATUS_PARSE = 9,
  QR_STATUS_IO = 10,
  QR_STATUS_PANIC = 11,
} QrStatus;

typedef enum QrState {
  QR_STATE_GROUND = 0,
  QR_STATE_EXCITED = 1,
} QrState;

// Opaque readout configuration.
typedef struct QrReadoutConfig QrReadoutConfig;

// Opaque set of normalized single-shot IQ records.
typedef struct QrShotSet QrShotSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL after a
// success. Valid until the next call into this library on the same thread.
const char *qr_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qr_version(void);

// Complementary error function.
double qr_erfc(double x);

// E_C in GHz for a shunt capacitance in farads.
enum QrStatus qr_charging_energy_ghz(double capacitance, double *ec_ghz);

// Transmon 0→1 frequency in GHz; `flux` in units of Φ₀.
enum QrStatus qr_transmon_frequency_ghz(double ej_total_ghz,
                                        double ec_ghz,
                                        double flux,
                                        double *f_ghz);

// χ = (g²/Δ)·α/(Δ+α), all in the same angular units.
enum QrStatus qr_dispersive_shift(double g, double delta, double alpha, double *chi);

// Lumped resonance 1/(2π√(LC)) in Hz.
enum QrStatus qr_resonance_frequency(double inductance, double capacitance, double *f_hz);

// κ = 2π·f_r/Q_c in rad/s.
enum QrStatus qr_kappa_from_qc(double f_r, double q_c, double *kappa);

// Kinetic sheet inductance (H/□) from a quarter-wave CPW frequency. All
// inputs SI: length m, inductance H/m, capacitance F/m, width m.
enum QrStatus qr_extract_lk_cpw(double measured_f,
                                double length,
                                double l_per_length,
                                double c_per_length,
                                double geometric_l_per_square,
                                double line_width,
                                double *lk);

// Dielectric-limited T1 in seconds.
enum QrStatus qr_t1_dielectric(double f_q, double q_diel, double *t1);

// Purcell-limited T1 in seconds; g, Δ, κ in rad/s.
enum QrStatus qr_t1_purcell(double g, double delta, double kappa, double *t1);

// F_s = 1 − erfc(SNR/2).
enum QrStatus qr_separation_fidelity(double snr, double *fidelity);

// Fits V₀·exp(−κt/2) + offset to `n` samples; writes κ and its standard error.
//
// # Safety
// `t` and `v` must each point to `n` readable doubles.
enum QrStatus qr_fit_kappa_ringdown(const double *t,
                                    const double *v,
                                    uintptr_t n,
                                    double *kappa,
                                    double *kappa_err);

// Fits a constant Q_diel to T1 versus qubit frequency (Hz, s). `t1_spread`
// may be NULL for an unweighted fit.
//
// # Safety
// Non-null arrays must each hold `n` readable doubles.
enum QrStatus qr_fit_qdiel(const double *f_q,
                           const double *t1,
                           const double *t1_spread,
                           uintptr_t n,
                           double *q_diel,
                           double *q_diel_err);

// Creates a readout configuration; all rates in rad/s, `tau_m` in s.
enum QrStatus qr_readout_config_new(double epsilon,
                                    double kappa,
                                    double chi,
                                    double tau_m,
                                    uintptr_t n_shots,
                                    uint64_t seed,
                                    bool transient,
                                    struct QrReadoutConfig **config);

// Like [`qr_readout_config_new`] with ε chosen so the closed-form SNR is
// `target_snr` at `calibration_tau`.
enum QrStatus qr_readout_config_calibrated(double kappa,
                                           double chi,
                                           double calibration_tau,
                                           double target_snr,
                                           double tau_m,
                                           uintptr_t n_shots,
                                           uint64_t seed,
                                           struct QrReadoutConfig **config);

// Releases a configuration. NULL is ignored.
//
// # Safety
// `config` must come from this library and not be used afterwards.
void qr_readout_config_free(struct QrReadoutConfig *config);

// Drive amplitude ε of a configuration, rad/s.
//
// # Safety
// `config` must be a live handle or NULL.
enum QrStatus qr_readout_config_epsilon(const struct QrReadoutConfig *config, double *epsilon);

// Closed-form SNR (2ε/κ)·√(2κτ)·|sin 2φ|.
//
// # Safety
// `config` must be a live handle or NULL.
enum QrStatus qr_snr_asymptotic(const struct QrReadoutConfig *config, double *snr);

// Monte-Carlo shots for both states. Output is independent of `workers`
// (0 means one).
//
// # Safety
// `config` must be a live handle or NULL.
enum QrStatus qr_simulate_shots(const struct QrReadoutConfig *config,
                                uintptr_t workers,
                                struct QrShotSet **shots);

// Releases a shot set. NULL is ignored.
//
// # Safety
// `shots` must come from this library and not be used afterwards.
void qr_shot_set_free(struct QrShotSet *shots);

// Shots per state, or 0 for NULL.
//
// # Safety
// `shots` must be a live handle or NULL.
uintptr_t qr_shot_set_len(const struct QrShotSet *shots);

// Copies one state's normalized I and Q records into caller buffers of
// `capacity` doubles each; `capacity` must be at least the set length.
//
// # Safety
// `shots` must be a live handle; `i` and `q` must hold `capacity` writable doubles.
enum QrStatus qr_shot_set_copy(const struct QrShotSet *shots,
                               enum QrState state,
                               double *i,
                               double *q,
                               uintptr_t capacity);

// Raw noise widths used to normalize the I and Q quadratures.
//
// # Safety
// `shots` must be a live handle; `sigma` must hold 2 writable doubles.
enum QrStatus qr_shot_set_sigma(const struct QrShotSet *shots, double *sigma);

// Histogram-fitted SNR of a shot set.
//
// # Safety
// `shots` must be a live handle or NULL.
enum QrStatus qr_shot_set_snr(const struct QrShotSet *shots, double *snr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QREADOUT_H */
