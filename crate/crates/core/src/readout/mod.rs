//! Dispersive readout: closed-form SNR, driven-cavity response, Monte-Carlo
//! single-shot records and their σ-normalized analysis.
//!
//! The cavity obeys `dα/dt = −(κ/2 ± iχ)α + ε` with the drive midway between
//! the two pulled resonator frequencies, `+iχ` for the ground state and
//! `−iχ` for the excited state. Each shot integrates the cavity field over
//! the measurement window and adds one Gaussian noise sample per quadrature.
//! The noise width `√(τ/2κ)` is fixed so that the separation of the two
//! long-time means over the noise width is exactly
//! `(2ε/κ)·√(2κτ)·|sin 2φ|`.

mod shots;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::fitting::erfc;
use crate::physics::dispersive_phase;

pub use self::shots::{
    default_workers, histogram_fit, simulate_shots, simulate_shots_with_workers, sub_seed, HistogramFit, ShotSet,
    SHOT_BLOCK,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    pub fn label(self) -> &'static str {
        match self {
            QubitState::Ground => "g",
            QubitState::Excited => "e",
        }
    }

    // Sign of the dispersive pull in the cavity equation of motion.
    fn pull(self) -> f64 {
        match self {
            QubitState::Ground => 1.0,
            QubitState::Excited => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfig {
    /// Drive amplitude in the cavity equation of motion, rad/s.
    pub epsilon: f64,
    /// Resonator linewidth, rad/s.
    pub kappa: f64,
    /// Dispersive half-shift, rad/s.
    pub chi: f64,
    /// Measurement window, s.
    pub tau_m: f64,
    pub n_shots: usize,
    pub seed: u64,
    /// Integrate the cavity transient instead of using the steady-state mean.
    pub transient: bool,
}

impl ReadoutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::validation("epsilon", "must be ≥ 0"));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::validation("kappa", "must be > 0"));
        }
        if !self.chi.is_finite() {
            return Err(Error::validation("chi", "must be finite"));
        }
        if !(self.tau_m > 0.0) || !self.tau_m.is_finite() {
            return Err(Error::validation("tau_m", "must be > 0"));
        }
        if self.n_shots < 2 {
            return Err(Error::validation("n_shots", "must be ≥ 2"));
        }
        Ok(())
    }

    pub fn with_tau(mut self, tau_m: f64) -> Self {
        self.tau_m = tau_m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn phase(&self) -> Result<f64> {
        dispersive_phase(self.chi, self.kappa)
    }

    fn decay(&self, state: QubitState) -> Complex64 {
        Complex64::new(self.kappa / 2.0, state.pull() * self.chi)
    }

    /// Steady-state cavity field ε/(κ/2 ± iχ).
    pub fn steady_state(&self, state: QubitState) -> Complex64 {
        Complex64::new(self.epsilon, 0.0) / self.decay(state)
    }

    /// Per-quadrature noise width of one integrated shot, √(τ/2κ).
    pub fn noise_sigma(&self) -> f64 {
        (self.tau_m / (2.0 * self.kappa)).sqrt()
    }
}

/// `(2ε/κ)·√(2κτ)·|sin 2φ|` with φ = arctan(2χ/κ).
pub fn snr_asymptotic(config: &ReadoutConfig) -> Result<f64> {
    config.validate()?;
    let phi = config.phase()?;
    Ok(2.0 * config.epsilon / config.kappa * (2.0 * config.kappa * config.tau_m).sqrt() * (2.0 * phi).sin().abs())
}

/// Drive amplitude that puts the closed-form SNR at `target` for the given
/// linewidth, shift and window.
pub fn calibrate_epsilon(kappa: f64, chi: f64, tau_m: f64, target: f64) -> Result<f64> {
    require_positive("kappa", kappa)?;
    require_positive("tau_m", tau_m)?;
    if !(target >= 0.0) {
        return Err(Error::domain("target SNR must be ≥ 0"));
    }
    let phi = dispersive_phase(chi, kappa)?;
    let per_unit = 2.0 / kappa * (2.0 * kappa * tau_m).sqrt() * (2.0 * phi).sin().abs();
    if per_unit == 0.0 {
        return Err(Error::domain("χ = 0 gives no state-dependent signal"));
    }
    Ok(target / per_unit)
}

/// Cavity field at time `t` after the drive turns on from vacuum.
pub fn cavity_response(state: QubitState, config: &ReadoutConfig, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be ≥ 0, got {t}")));
    }
    let lambda = config.decay(state);
    Ok(config.steady_state(state) * (1.0 - (-lambda * t).exp()))
}

/// Mean integrated signal of one shot for the given state.
pub fn integrated_signal(state: QubitState, config: &ReadoutConfig) -> Complex64 {
    let tau = config.tau_m;
    let steady = config.steady_state(state);
    if config.transient {
        // ∫₀^τ α∞(1 − e^(−λt)) dt
        let lambda = config.decay(state);
        steady * (tau - (1.0 - (-lambda * tau).exp()) / lambda)
    } else {
        steady * tau
    }
}

/// Exact SNR of the simulated means, |s_e − s_g|/σ_raw. Equals
/// [`snr_asymptotic`] when the transient is off.
pub fn snr_of_means(config: &ReadoutConfig) -> Result<f64> {
    config.validate()?;
    let sep = integrated_signal(QubitState::Excited, config) - integrated_signal(QubitState::Ground, config);
    Ok(sep.norm() / config.noise_sigma())
}

/// F_s = 1 − erfc(SNR/2).
pub fn separation_fidelity(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::domain(format!("SNR must be ≥ 0, got {snr}")));
    }
    Ok(1.0 - erfc(snr / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau_m: f64,
    pub snr_closed_form: f64,
    pub snr_mc: f64,
    /// Separation fidelity of the closed-form SNR.
    pub fidelity: f64,
}

/// Evaluates closed-form and Monte-Carlo SNR at each window length. Row `k`
/// draws its shots from `sub_seed(config.seed, k)`.
pub fn snr_sweep(config: &ReadoutConfig, taus: &[f64]) -> Result<Vec<SweepRow>> {
    snr_sweep_with_workers(config, taus, shots::default_workers())
}

pub fn snr_sweep_with_workers(config: &ReadoutConfig, taus: &[f64], workers: usize) -> Result<Vec<SweepRow>> {
    if taus.is_empty() {
        return Err(Error::domain("τ list is empty"));
    }
    config.validate()?;
    taus.iter()
        .enumerate()
        .map(|(k, &tau)| {
            require_positive("tau", tau)?;
            let cfg = config.with_tau(tau).with_seed(sub_seed(config.seed, k as u64));
            let snr_closed_form = snr_asymptotic(&cfg)?;
            let shots = simulate_shots_with_workers(&cfg, workers)?;
            let snr_mc = histogram_fit(&shots)?.snr;
            Ok(SweepRow {
                tau_m: tau,
                snr_closed_form,
                snr_mc,
                fidelity: separation_fidelity(snr_closed_form)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{hz_to_angular, KHZ, NS};

    pub(crate) fn calibrated(n_shots: usize) -> ReadoutConfig {
        let kappa = 1.0 / (300.0 * NS);
        let chi = hz_to_angular(930.0 * KHZ) / 2.0;
        let epsilon = calibrate_epsilon(kappa, chi, 700.0 * NS, 5.0).unwrap();
        ReadoutConfig {
            epsilon,
            kappa,
            chi,
            tau_m: 700.0 * NS,
            n_shots,
            seed: 2024,
            transient: false,
        }
    }

    #[test]
    fn calibrated_epsilon_value() {
        // 5/((2/κ)·√(2κ·700 ns)·|sin 2φ|), evaluated independently.
        let cfg = calibrated(100);
        assert!((cfg.epsilon / 4.481_464_067e6 - 1.0).abs() < 1e-9, "{}", cfg.epsilon);
        assert!((snr_asymptotic(&cfg).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn snr_scaling_examples() {
        let cfg = calibrated(100);
        let quad = snr_asymptotic(&cfg.with_tau(4.0 * cfg.tau_m)).unwrap();
        assert!((quad / 10.0 - 1.0).abs() < 1e-12);
        let mut dark = cfg;
        dark.epsilon = 0.0;
        assert_eq!(snr_asymptotic(&dark).unwrap(), 0.0);
    }

    #[test]
    fn snr_maximized_at_half_kappa() {
        let base = calibrated(100);
        let grid: Vec<f64> = (0..=495).map(|k| 0.05 + 0.01 * k as f64).collect();
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                let sa = snr_asymptotic(&ReadoutConfig { chi: a * base.kappa, ..base }).unwrap();
                let sb = snr_asymptotic(&ReadoutConfig { chi: b * base.kappa, ..base }).unwrap();
                sa.total_cmp(&sb)
            })
            .unwrap();
        assert!((best - 0.5).abs() <= 0.01 + 1e-12, "{best}");
    }

    #[test]
    fn cavity_response_examples() {
        let cfg = calibrated(100);
        assert_eq!(cavity_response(QubitState::Ground, &cfg, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        let late = cavity_response(QubitState::Ground, &cfg, 1e-3).unwrap();
        let mag = cfg.epsilon / ((cfg.kappa / 2.0).powi(2) + cfg.chi.powi(2)).sqrt();
        assert!((late.norm() / mag - 1.0).abs() < 1e-12);
        let phi = cfg.phase().unwrap();
        assert!((late.arg() + phi).abs() < 1e-12);
        let late_e = cavity_response(QubitState::Excited, &cfg, 1e-3).unwrap();
        assert!((late_e.arg() - phi).abs() < 1e-12);

        let mut flat = cfg;
        flat.chi = 0.0;
        for t in [0.0, 1e-7, 5e-7, 3e-6] {
            assert_eq!(
                cavity_response(QubitState::Ground, &flat, t).unwrap(),
                cavity_response(QubitState::Excited, &flat, t).unwrap()
            );
        }
        assert!(cavity_response(QubitState::Ground, &cfg, -1.0).is_err());
    }

    #[test]
    fn cavity_response_solves_equation_of_motion() {
        // Forward-integrate dα/dt = −(κ/2 + iχ)α + ε with RK4 and compare.
        let cfg = calibrated(100);
        let lambda = Complex64::new(cfg.kappa / 2.0, cfg.chi);
        let rhs = |a: Complex64| -lambda * a + cfg.epsilon;
        let dt = 0.1 * NS;
        let mut a = Complex64::new(0.0, 0.0);
        for _ in 0..5000 {
            let k1 = rhs(a);
            let k2 = rhs(a + k1 * (dt / 2.0));
            let k3 = rhs(a + k2 * (dt / 2.0));
            let k4 = rhs(a + k3 * dt);
            a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        let exact = cavity_response(QubitState::Ground, &cfg, 5000.0 * dt).unwrap();
        assert!((a - exact).norm() / exact.norm() < 1e-9);
    }

    #[test]
    fn integrated_signal_matches_quadrature() {
        let mut cfg = calibrated(100);
        cfg.transient = true;
        let steps = 20_000;
        let h = cfg.tau_m / steps as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..steps {
            let t = (k as f64 + 0.5) * h;
            acc += cavity_response(QubitState::Excited, &cfg, t).unwrap() * h;
        }
        let closed = integrated_signal(QubitState::Excited, &cfg);
        assert!((acc - closed).norm() / closed.norm() < 1e-8);
    }

    #[test]
    fn steady_state_means_reproduce_closed_form() {
        let cfg = calibrated(100);
        for tau in [100.0 * NS, 700.0 * NS, 5000.0 * NS] {
            let c = cfg.with_tau(tau);
            let a = snr_of_means(&c).unwrap();
            let b = snr_asymptotic(&c).unwrap();
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transient_lag_is_analytic() {
        // |s_e − s_g| → τ|Δα∞|·(1 − κ/((κ²/4 + χ²)τ)) to first order in 1/τ.
        let mut cfg = calibrated(100);
        cfg.transient = true;
        for kt in [20.0, 50.0, 200.0] {
            let c = cfg.with_tau(kt / cfg.kappa);
            let ratio = snr_of_means(&c).unwrap() / snr_asymptotic(&c).unwrap();
            let lag = cfg.kappa / ((cfg.kappa.powi(2) / 4.0 + cfg.chi.powi(2)) * c.tau_m);
            assert!((ratio - (1.0 - lag)).abs() < 1e-3 * lag, "{kt}: {ratio} vs {}", 1.0 - lag);
        }
    }

    #[test]
    fn fidelity_examples() {
        let f = separation_fidelity(5.0).unwrap();
        assert!((f - 0.999_593_047_982_555).abs() < 1e-12);
        assert!(f > 0.999);
        assert_eq!(separation_fidelity(0.0).unwrap(), 0.0);
        assert_eq!(separation_fidelity(80.0).unwrap(), 1.0);
        assert!(separation_fidelity(-0.1).is_err());
    }

    #[test]
    fn fidelity_strictly_increasing() {
        let mut prev = -1.0;
        for k in 0..=1000 {
            let f = separation_fidelity(k as f64 * 0.01).unwrap();
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn sweep_closed_form_column() {
        let cfg = calibrated(2000);
        let rows = snr_sweep(&cfg, &[175.0 * NS, 700.0 * NS, 2800.0 * NS]).unwrap();
        let want = [2.5, 5.0, 10.0];
        for (row, w) in rows.iter().zip(want) {
            assert!((row.snr_closed_form - w).abs() < 1e-9);
        }
        assert!(snr_sweep(&cfg, &[]).is_err());
        assert!(snr_sweep(&cfg, &[-1.0]).is_err());
    }

    #[test]
    fn sweep_monte_carlo_tracks_closed_form() {
        let cfg = calibrated(10_000);
        let taus: Vec<f64> = [10.0, 15.0, 25.0].iter().map(|kt| kt / cfg.kappa).collect();
        for row in snr_sweep(&cfg, &taus).unwrap() {
            assert!((row.snr_mc / row.snr_closed_form - 1.0).abs() < 0.05, "{row:?}");
        }
    }

    #[test]
    fn config_validation() {
        let good = calibrated(100);
        assert!(good.validate().is_ok());
        assert!(ReadoutConfig { kappa: 0.0, ..good }.validate().is_err());
        assert!(ReadoutConfig { tau_m: 0.0, ..good }.validate().is_err());
        assert!(ReadoutConfig { n_shots: 1, ..good }.validate().is_err());
        assert!(ReadoutConfig { epsilon: -1.0, ..good }.validate().is_err());
        assert!(calibrate_epsilon(good.kappa, 0.0, good.tau_m, 5.0).is_err());
    }
}
