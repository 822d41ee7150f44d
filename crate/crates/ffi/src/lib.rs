//! C ABI over `qreadout`.
//!
//! Every fallible function returns a [`QrStatus`] and writes results through
//! out-pointers. On failure the message is available from
//! [`qr_last_error_message`] on the same thread. Handles are opaque and must
//! be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use qreadout::coherence::{fit_qdiel, t1_dielectric, t1_purcell, CoherenceRecord};
use qreadout::physics::{charging_energy, dispersive_shift, TransmonParams};
use qreadout::readout::{
    calibrate_epsilon, histogram_fit, separation_fidelity, simulate_shots_with_workers, snr_asymptotic,
    ReadoutConfig, ShotSet,
};
use qreadout::resonator::{extract_lk_cpw, fit_kappa_ringdown, kappa_from_qc, resonance_frequency, CpwTestStructure, Termination};
use qreadout::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    Domain = 3,
    InsufficientData = 4,
    DegenerateData = 5,
    FitFailure = 6,
    FitDomain = 7,
    NotApplicable = 8,
    Parse = 9,
    Io = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrState {
    Ground = 0,
    Excited = 1,
}

/// Opaque readout configuration.
pub struct QrReadoutConfig {
    inner: ReadoutConfig,
}

/// Opaque set of normalized single-shot IQ records.
pub struct QrShotSet {
    inner: ShotSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> QrStatus {
    match err {
        Error::Domain(_) => QrStatus::Domain,
        Error::InsufficientData { .. } => QrStatus::InsufficientData,
        Error::DegenerateData(_) => QrStatus::DegenerateData,
        Error::FitFailure(_) => QrStatus::FitFailure,
        Error::FitDomain(_) => QrStatus::FitDomain,
        Error::NotApplicable(_) => QrStatus::NotApplicable,
        Error::Parse { .. } => QrStatus::Parse,
        Error::Validation { .. } => QrStatus::Validation,
        Error::Input { .. } | Error::Io(_) | Error::Csv(_) => QrStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `body`, converting errors and panics into a status and last-error text.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QrStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed as `{name}`"));
            QrStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            QrStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: caller guarantees `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(name))
}

fn input<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: caller guarantees `p` is null or points to a live value.
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

fn array<'a>(p: *const f64, n: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: caller guarantees `n` readable elements at `p`.
    Ok(unsafe { slice::from_raw_parts(p, n) })
}

/// Message for the most recent failure on this thread, or NULL after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn qr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qr_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains NUL"),
    };
    VERSION.as_ptr()
}

/// Complementary error function.
#[no_mangle]
pub extern "C" fn qr_erfc(x: f64) -> f64 {
    qreadout::fitting::erfc(x)
}

/// E_C in GHz for a shunt capacitance in farads.
#[no_mangle]
pub extern "C" fn qr_charging_energy_ghz(capacitance: f64, ec_ghz: *mut f64) -> QrStatus {
    guard(|| {
        *out(ec_ghz, "ec_ghz")? = charging_energy(capacitance)?;
        Ok(())
    })
}

/// Transmon 0→1 frequency in GHz; `flux` in units of Φ₀.
#[no_mangle]
pub extern "C" fn qr_transmon_frequency_ghz(ej_total_ghz: f64, ec_ghz: f64, flux: f64, f_ghz: *mut f64) -> QrStatus {
    guard(|| {
        *out(f_ghz, "f_ghz")? = TransmonParams::new(ej_total_ghz, ec_ghz, flux)?.frequency_ghz()?;
        Ok(())
    })
}

/// χ = (g²/Δ)·α/(Δ+α), all in the same angular units.
#[no_mangle]
pub extern "C" fn qr_dispersive_shift(g: f64, delta: f64, alpha: f64, chi: *mut f64) -> QrStatus {
    guard(|| {
        *out(chi, "chi")? = dispersive_shift(g, delta, alpha)?;
        Ok(())
    })
}

/// Lumped resonance 1/(2π√(LC)) in Hz.
#[no_mangle]
pub extern "C" fn qr_resonance_frequency(inductance: f64, capacitance: f64, f_hz: *mut f64) -> QrStatus {
    guard(|| {
        *out(f_hz, "f_hz")? = resonance_frequency(inductance, capacitance)?;
        Ok(())
    })
}

/// κ = 2π·f_r/Q_c in rad/s.
#[no_mangle]
pub extern "C" fn qr_kappa_from_qc(f_r: f64, q_c: f64, kappa: *mut f64) -> QrStatus {
    guard(|| {
        *out(kappa, "kappa")? = kappa_from_qc(f_r, q_c)?;
        Ok(())
    })
}

/// Kinetic sheet inductance (H/□) from a quarter-wave CPW frequency. All
/// inputs SI: length m, inductance H/m, capacitance F/m, width m.
#[no_mangle]
pub extern "C" fn qr_extract_lk_cpw(
    measured_f: f64,
    length: f64,
    l_per_length: f64,
    c_per_length: f64,
    geometric_l_per_square: f64,
    line_width: f64,
    lk: *mut f64,
) -> QrStatus {
    guard(|| {
        let s = CpwTestStructure::new(length, l_per_length, c_per_length, Termination::QuarterWave)?;
        *out(lk, "lk")? = extract_lk_cpw(measured_f, &s, geometric_l_per_square, line_width)?;
        Ok(())
    })
}

/// Dielectric-limited T1 in seconds.
#[no_mangle]
pub extern "C" fn qr_t1_dielectric(f_q: f64, q_diel: f64, t1: *mut f64) -> QrStatus {
    guard(|| {
        *out(t1, "t1")? = t1_dielectric(f_q, q_diel)?;
        Ok(())
    })
}

/// Purcell-limited T1 in seconds; g, Δ, κ in rad/s.
#[no_mangle]
pub extern "C" fn qr_t1_purcell(g: f64, delta: f64, kappa: f64, t1: *mut f64) -> QrStatus {
    guard(|| {
        *out(t1, "t1")? = t1_purcell(g, delta, kappa)?;
        Ok(())
    })
}

/// F_s = 1 − erfc(SNR/2).
#[no_mangle]
pub extern "C" fn qr_separation_fidelity(snr: f64, fidelity: *mut f64) -> QrStatus {
    guard(|| {
        *out(fidelity, "fidelity")? = separation_fidelity(snr)?;
        Ok(())
    })
}

/// Fits V₀·exp(−κt/2) + offset to `n` samples; writes κ and its standard error.
///
/// # Safety
/// `t` and `v` must each point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn qr_fit_kappa_ringdown(
    t: *const f64,
    v: *const f64,
    n: usize,
    kappa: *mut f64,
    kappa_err: *mut f64,
) -> QrStatus {
    guard(|| {
        let trace: Vec<(f64, f64)> = array(t, n, "t")?.iter().copied().zip(array(v, n, "v")?.iter().copied()).collect();
        let fit = fit_kappa_ringdown(&trace)?;
        *out(kappa, "kappa")? = fit.kappa;
        *out(kappa_err, "kappa_err")? = fit.kappa_err;
        Ok(())
    })
}

/// Fits a constant Q_diel to T1 versus qubit frequency (Hz, s). `t1_spread`
/// may be NULL for an unweighted fit.
///
/// # Safety
/// Non-null arrays must each hold `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn qr_fit_qdiel(
    f_q: *const f64,
    t1: *const f64,
    t1_spread: *const f64,
    n: usize,
    q_diel: *mut f64,
    q_diel_err: *mut f64,
) -> QrStatus {
    guard(|| {
        let f = array(f_q, n, "f_q")?;
        let t = array(t1, n, "t1")?;
        let spread = if t1_spread.is_null() { None } else { Some(array(t1_spread, n, "t1_spread")?) };
        let records = (0..n)
            .map(|k| {
                let r = CoherenceRecord::new(f[k], t[k])?;
                match spread {
                    Some(s) => r.with_spread(s[k]),
                    None => Ok(r),
                }
            })
            .collect::<qreadout::Result<Vec<_>>>()?;
        let fit = fit_qdiel(&records, None)?;
        *out(q_diel, "q_diel")? = fit.q_diel;
        *out(q_diel_err, "q_diel_err")? = fit.q_diel_err;
        Ok(())
    })
}

/// Creates a readout configuration; all rates in rad/s, `tau_m` in s.
#[no_mangle]
pub extern "C" fn qr_readout_config_new(
    epsilon: f64,
    kappa: f64,
    chi: f64,
    tau_m: f64,
    n_shots: usize,
    seed: u64,
    transient: bool,
    config: *mut *mut QrReadoutConfig,
) -> QrStatus {
    guard(|| {
        let slot = out(config, "config")?;
        let inner = ReadoutConfig {
            epsilon,
            kappa,
            chi,
            tau_m,
            n_shots,
            seed,
            transient,
        };
        inner.validate()?;
        *slot = Box::into_raw(Box::new(QrReadoutConfig { inner }));
        Ok(())
    })
}

/// Like [`qr_readout_config_new`] with ε chosen so the closed-form SNR is
/// `target_snr` at `calibration_tau`.
#[no_mangle]
pub extern "C" fn qr_readout_config_calibrated(
    kappa: f64,
    chi: f64,
    calibration_tau: f64,
    target_snr: f64,
    tau_m: f64,
    n_shots: usize,
    seed: u64,
    config: *mut *mut QrReadoutConfig,
) -> QrStatus {
    let epsilon = match calibrate_epsilon(kappa, chi, calibration_tau, target_snr) {
        Ok(e) => e,
        Err(e) => return guard(|| Err(e.into())),
    };
    qr_readout_config_new(epsilon, kappa, chi, tau_m, n_shots, seed, false, config)
}

/// Releases a configuration. NULL is ignored.
///
/// # Safety
/// `config` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qr_readout_config_free(config: *mut QrReadoutConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Drive amplitude ε of a configuration, rad/s.
///
/// # Safety
/// `config` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qr_readout_config_epsilon(config: *const QrReadoutConfig, epsilon: *mut f64) -> QrStatus {
    guard(|| {
        *out(epsilon, "epsilon")? = input(config, "config")?.inner.epsilon;
        Ok(())
    })
}

/// Closed-form SNR (2ε/κ)·√(2κτ)·|sin 2φ|.
///
/// # Safety
/// `config` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qr_snr_asymptotic(config: *const QrReadoutConfig, snr: *mut f64) -> QrStatus {
    guard(|| {
        *out(snr, "snr")? = snr_asymptotic(&input(config, "config")?.inner)?;
        Ok(())
    })
}

/// Monte-Carlo shots for both states. Output is independent of `workers`
/// (0 means one).
///
/// # Safety
/// `config` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qr_simulate_shots(
    config: *const QrReadoutConfig,
    workers: usize,
    shots: *mut *mut QrShotSet,
) -> QrStatus {
    guard(|| {
        let slot = out(shots, "shots")?;
        let inner = simulate_shots_with_workers(&input(config, "config")?.inner, workers.max(1))?;
        *slot = Box::into_raw(Box::new(QrShotSet { inner }));
        Ok(())
    })
}

/// Releases a shot set. NULL is ignored.
///
/// # Safety
/// `shots` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qr_shot_set_free(shots: *mut QrShotSet) {
    if !shots.is_null() {
        drop(Box::from_raw(shots));
    }
}

/// Shots per state, or 0 for NULL.
///
/// # Safety
/// `shots` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qr_shot_set_len(shots: *const QrShotSet) -> usize {
    shots.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies one state's normalized I and Q records into caller buffers of
/// `capacity` doubles each; `capacity` must be at least the set length.
///
/// # Safety
/// `shots` must be a live handle; `i` and `q` must hold `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qr_shot_set_copy(
    shots: *const QrShotSet,
    state: QrState,
    i: *mut f64,
    q: *mut f64,
    capacity: usize,
) -> QrStatus {
    guard(|| {
        let set = &input(shots, "shots")?.inner;
        let (src_i, src_q) = match state {
            QrState::Ground => (&set.i_ground, &set.q_ground),
            QrState::Excited => (&set.i_excited, &set.q_excited),
        };
        if capacity < src_i.len() {
            return Err(Error::InsufficientData {
                needed: src_i.len(),
                got: capacity,
            }
            .into());
        }
        if i.is_null() {
            return Err(Failure::Null("i"));
        }
        if q.is_null() {
            return Err(Failure::Null("q"));
        }
        slice::from_raw_parts_mut(i, src_i.len()).copy_from_slice(src_i);
        slice::from_raw_parts_mut(q, src_q.len()).copy_from_slice(src_q);
        Ok(())
    })
}

/// Raw noise widths used to normalize the I and Q quadratures.
///
/// # Safety
/// `shots` must be a live handle; `sigma` must hold 2 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qr_shot_set_sigma(shots: *const QrShotSet, sigma: *mut f64) -> QrStatus {
    guard(|| {
        let s = input(shots, "shots")?.inner.sigma;
        if sigma.is_null() {
            return Err(Failure::Null("sigma"));
        }
        slice::from_raw_parts_mut(sigma, 2).copy_from_slice(&s);
        Ok(())
    })
}

/// Histogram-fitted SNR of a shot set.
///
/// # Safety
/// `shots` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qr_shot_set_snr(shots: *const QrShotSet, snr: *mut f64) -> QrStatus {
    guard(|| {
        *out(snr, "snr")? = histogram_fit(&input(shots, "shots")?.inner)?.snr;
        Ok(())
    })
}
