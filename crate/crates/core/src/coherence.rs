//! Qubit relaxation budget: frequency-independent dielectric loss plus
//! Purcell decay through the readout resonator.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{require_positive, Error, Result};
use crate::fitting::{least_squares, DataPoint, FitResult, Model};

/// Allowed excess of T2E over the 2·T1 limit.
pub const T2_TOLERANCE: f64 = 0.05;

/// One measured qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceRecord {
    /// Qubit frequency, Hz.
    pub f_q: f64,
    pub t1: f64,
    /// Half-width of the T1 temporal variation.
    pub t1_spread: Option<f64>,
    pub t2e: Option<f64>,
}

impl CoherenceRecord {
    pub fn new(f_q: f64, t1: f64) -> Result<Self> {
        require_positive("f_q", f_q)?;
        require_positive("t1", t1)?;
        Ok(Self {
            f_q,
            t1,
            t1_spread: None,
            t2e: None,
        })
    }

    pub fn with_spread(mut self, spread: f64) -> Result<Self> {
        require_positive("t1_spread", spread)?;
        self.t1_spread = Some(spread);
        Ok(self)
    }

    pub fn with_t2e(mut self, t2e: f64) -> Result<Self> {
        require_positive("t2e", t2e)?;
        self.t2e = Some(t2e);
        Ok(self)
    }
}

/// Qubit–resonator coupling for the Purcell channel. Detuning is taken
/// against `omega_r` at each qubit frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurcellCoupling {
    /// Coupling rate, rad/s.
    pub g: f64,
    /// Resonator angular frequency, rad/s.
    pub omega_r: f64,
    /// Resonator linewidth, rad/s.
    pub kappa: f64,
}

impl PurcellCoupling {
    pub fn new(g: f64, omega_r: f64, kappa: f64) -> Result<Self> {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::domain(format!("g must be ≥ 0, got {g}")));
        }
        require_positive("omega_r", omega_r)?;
        require_positive("kappa", kappa)?;
        Ok(Self { g, omega_r, kappa })
    }

    /// Coupling referenced to a qubit at `f_q` (Hz) with detuning `delta`
    /// (rad/s, qubit minus resonator).
    pub fn from_detuning(g: f64, f_q: f64, delta: f64, kappa: f64) -> Result<Self> {
        Self::new(g, TAU * f_q - delta, kappa)
    }

    pub fn detuning(&self, f_q: f64) -> f64 {
        TAU * f_q - self.omega_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossModel {
    pub q_diel: f64,
    pub purcell: Option<PurcellCoupling>,
    /// Pure dephasing rate, 1/s.
    pub gamma_phi: f64,
}

impl LossModel {
    pub fn dielectric(q_diel: f64) -> Result<Self> {
        let model = Self {
            q_diel,
            purcell: None,
            gamma_phi: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_purcell(mut self, purcell: PurcellCoupling) -> Self {
        self.purcell = Some(purcell);
        self
    }

    pub fn with_dephasing(mut self, gamma_phi: f64) -> Result<Self> {
        self.gamma_phi = gamma_phi;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("q_diel", self.q_diel)?;
        if let Some(p) = &self.purcell {
            require_positive("kappa", p.kappa)?;
        }
        if !(self.gamma_phi >= 0.0) || !self.gamma_phi.is_finite() {
            return Err(Error::domain("gamma_phi must be ≥ 0"));
        }
        Ok(())
    }
}

/// T1 from dielectric loss alone, Q_diel/ω_q.
pub fn t1_dielectric(f_q: f64, q_diel: f64) -> Result<f64> {
    require_positive("f_q", f_q)?;
    require_positive("q_diel", q_diel)?;
    Ok(q_diel / (TAU * f_q))
}

/// Purcell-limited T1 = Δ²/(g²κ). Infinite when g = 0.
pub fn t1_purcell(g: f64, delta: f64, kappa: f64) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::domain("Purcell formula needs a non-zero detuning"));
    }
    require_positive("kappa", kappa)?;
    if g == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(delta * delta / (g * g * kappa))
}

pub fn t1_total(f_q: f64, model: &LossModel) -> Result<f64> {
    model.validate()?;
    let mut rate = 1.0 / t1_dielectric(f_q, model.q_diel)?;
    if let Some(p) = &model.purcell {
        rate += 1.0 / t1_purcell(p.g, p.detuning(f_q), p.kappa)?;
    }
    Ok(1.0 / rate)
}

/// T2 = 1/(1/(2T1) + Γφ).
pub fn t2_limit(t1: f64, gamma_phi: f64) -> Result<f64> {
    require_positive("t1", t1)?;
    if !(gamma_phi >= 0.0) {
        return Err(Error::domain("gamma_phi must be ≥ 0"));
    }
    Ok(1.0 / (1.0 / (2.0 * t1) + gamma_phi))
}

/// Relaxation time model with Q_diel as the single free parameter.
struct BudgetModel {
    purcell: Option<PurcellCoupling>,
}

impl BudgetModel {
    fn purcell_rate(&self, f_q: f64) -> f64 {
        match &self.purcell {
            Some(p) if p.g > 0.0 => {
                let delta = p.detuning(f_q);
                p.g * p.g * p.kappa / (delta * delta)
            }
            _ => 0.0,
        }
    }
}

impl Model for BudgetModel {
    fn n_params(&self) -> usize {
        1
    }

    fn eval(&self, f_q: f64, p: &[f64]) -> f64 {
        1.0 / (TAU * f_q / p[0] + self.purcell_rate(f_q))
    }

    fn gradient(&self, f_q: f64, p: &[f64]) -> Option<Vec<f64>> {
        let t1 = self.eval(f_q, p);
        Some(vec![t1 * t1 * TAU * f_q / (p[0] * p[0])])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdielFit {
    pub q_diel: f64,
    /// Standard error of `q_diel`.
    pub q_diel_err: f64,
    /// Whether 1/spread² weights were applied.
    pub weighted: bool,
    pub fit: FitResult,
}

/// Weighted least-squares fit of Q_diel to measured T1 values with the
/// Purcell channel, if any, held fixed.
///
/// Weights are 1/spread² when every record carries a spread and uniform
/// otherwise.
pub fn fit_qdiel(records: &[CoherenceRecord], purcell: Option<PurcellCoupling>) -> Result<QdielFit> {
    if records.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: records.len(),
        });
    }
    let model = BudgetModel { purcell };
    if let Some(p) = &purcell {
        for r in records {
            if p.detuning(r.f_q) == 0.0 {
                return Err(Error::domain(format!(
                    "qubit at {} Hz is resonant with the readout resonator",
                    r.f_q
                )));
            }
        }
    }
    let weighted = records.iter().all(|r| r.t1_spread.is_some());
    let data: Vec<DataPoint> = records
        .iter()
        .map(|r| {
            let w = match (weighted, r.t1_spread) {
                (true, Some(s)) => 1.0 / (s * s),
                _ => 1.0,
            };
            DataPoint::weighted(r.f_q, r.t1, w)
        })
        .collect();

    // Seed from the dielectric-only estimate, corrected for the Purcell rate.
    let seed = records
        .iter()
        .map(|r| {
            let diel_rate = (1.0 / r.t1 - model.purcell_rate(r.f_q)).max(0.1 / r.t1);
            TAU * r.f_q / diel_rate
        })
        .sum::<f64>()
        / records.len() as f64;

    let fit = least_squares(&model, &data, &[seed])?;
    if !fit.converged {
        return Err(Error::FitFailure(format!(
            "Q_diel fit did not converge in {} iterations",
            fit.iterations
        )));
    }
    let q = fit.params[0];
    if !(q > 0.0) {
        return Err(Error::FitFailure(format!("non-physical Q_diel {q}")));
    }
    Ok(QdielFit {
        q_diel: q,
        q_diel_err: fit.std_errors[0],
        weighted,
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct T2Check {
    pub pass: bool,
    /// t2e/(2·t1).
    pub ratio: f64,
}

/// Checks the echo time against the 2·T1 limit with a 5% allowance.
pub fn t2_bound_check(record: &CoherenceRecord) -> Result<T2Check> {
    let t2e = record
        .t2e
        .ok_or_else(|| Error::NotApplicable("record has no T2E measurement".into()))?;
    let ratio = t2e / (2.0 * record.t1);
    Ok(T2Check {
        pass: ratio <= 1.0 + T2_TOLERANCE,
        ratio,
    })
}

/// One row of a T1 budget table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetRow {
    pub f_q: f64,
    pub t1_dielectric: f64,
    pub t1_purcell: f64,
    pub t1_total: f64,
    pub t2_limit: f64,
}

pub fn budget_table(freqs: &[f64], model: &LossModel) -> Result<Vec<BudgetRow>> {
    freqs
        .iter()
        .map(|&f_q| {
            let t1_d = t1_dielectric(f_q, model.q_diel)?;
            let t1_p = match &model.purcell {
                Some(p) => t1_purcell(p.g, p.detuning(f_q), p.kappa)?,
                None => f64::INFINITY,
            };
            let total = t1_total(f_q, model)?;
            Ok(BudgetRow {
                f_q,
                t1_dielectric: t1_d,
                t1_purcell: t1_p,
                t1_total: total,
                t2_limit: t2_limit(total, model.gamma_phi)?,
            })
        })
        .collect()
}
