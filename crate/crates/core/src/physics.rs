//! Closed-form transmon and dispersive-coupling quantities.
//!
//! Energies are in GHz (E/h). Rates such as `g`, `delta`, `alpha`, `chi` and
//! `kappa` are angular, in rad/s.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::units::{ELEMENTARY_CHARGE, GHZ, PLANCK};

/// Transmon (or symmetric-SQUID transmon) circuit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    /// Total Josephson energy, GHz. For a SQUID this is the sum over both junctions.
    pub ej_total: f64,
    /// Charging energy, GHz.
    pub ec: f64,
    /// Applied flux in units of the flux quantum. Only the value modulo 1 matters.
    pub flux: f64,
    /// Junctions designed equal. Asymmetric SQUIDs are rejected.
    pub symmetric: bool,
}

impl TransmonParams {
    pub fn new(ej_total: f64, ec: f64, flux: f64) -> Result<Self> {
        let params = Self {
            ej_total,
            ec,
            flux,
            symmetric: true,
        };
        params.validate()?;
        Ok(params)
    }

    /// Single-junction fixed-frequency transmon; behaves like flux = 0.
    pub fn fixed(ej: f64, ec: f64) -> Result<Self> {
        Self::new(ej, ec, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("ej_total", self.ej_total)?;
        require_positive("ec", self.ec)?;
        if !self.flux.is_finite() {
            return Err(Error::domain(format!("flux must be finite, got {}", self.flux)));
        }
        if !self.symmetric {
            return Err(Error::domain("asymmetric SQUIDs are not supported"));
        }
        Ok(())
    }

    /// Flux folded into [0, 1).
    pub fn reduced_flux(&self) -> f64 {
        self.flux.rem_euclid(1.0)
    }

    pub fn effective_ej(&self) -> f64 {
        flux_effective_ej(self)
    }

    pub fn frequency_ghz(&self) -> Result<f64> {
        transmon_frequency(self)
    }

    /// Anharmonicity to leading order, -E_C, in GHz.
    pub fn anharmonicity_ghz(&self) -> f64 {
        -self.ec
    }
}

/// Charging energy E_C = e²/2C in GHz for a shunt capacitance in farads.
pub fn charging_energy(shunt_capacitance: f64) -> Result<f64> {
    require_positive("shunt capacitance", shunt_capacitance)?;
    Ok(ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * shunt_capacitance) / PLANCK / GHZ)
}

/// Flux-tuned Josephson energy of a symmetric SQUID, `ej_total·|cos(π·flux)|`.
pub fn flux_effective_ej(params: &TransmonParams) -> f64 {
    params.ej_total * (PI * params.reduced_flux()).cos().abs()
}

/// Qubit 0→1 transition frequency √(8·E_J·E_C) − E_C in GHz.
pub fn transmon_frequency(params: &TransmonParams) -> Result<f64> {
    params.validate()?;
    frequency_from_energies(flux_effective_ej(params), params.ec)
}

/// Same relation evaluated directly on an effective Josephson energy.
pub fn frequency_from_energies(ej_eff: f64, ec: f64) -> Result<f64> {
    require_positive("ec", ec)?;
    if !(ej_eff >= 0.0) || !ej_eff.is_finite() {
        return Err(Error::domain(format!("effective E_J must be non-negative, got {ej_eff}")));
    }
    let plasma = (8.0 * ej_eff * ec).sqrt();
    if plasma < ec {
        return Err(Error::domain(format!(
            "√(8·E_J·E_C) = {plasma} GHz is below E_C = {ec} GHz; not in the transmon regime"
        )));
    }
    Ok(plasma - ec)
}

/// Dispersive half-shift χ = (g²/Δ)·α/(Δ+α).
///
/// The two qubit states pull the resonator by ±χ. For a transmon (α < 0)
/// χ is negative on either side of the resonator and positive only in the
/// straddling regime 0 < Δ < |α|.
pub fn dispersive_shift(g: f64, delta: f64, alpha: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::domain("detuning Δ must be non-zero"));
    }
    if delta + alpha == 0.0 {
        return Err(Error::domain("Δ + α = 0 is a pole of the dispersive shift"));
    }
    Ok(g * g / delta * alpha / (delta + alpha))
}

/// Inverts [`dispersive_shift`] for the coupling magnitude given a measured χ.
pub fn coupling_from_chi(chi: f64, delta: f64, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(Error::domain("anharmonicity must be non-zero to infer g from χ"));
    }
    if delta == 0.0 || delta + alpha == 0.0 {
        return Err(Error::domain("Δ = 0 or Δ = −α"));
    }
    let g_sq = chi * delta * (delta + alpha) / alpha;
    if g_sq < 0.0 {
        return Err(Error::domain(format!(
            "χ = {chi} has the wrong sign for Δ = {delta}, α = {alpha}"
        )));
    }
    Ok(g_sq.sqrt())
}

/// Steady-state pointer phase φ = arctan(2χ/κ).
pub fn dispersive_phase(chi: f64, kappa: f64) -> Result<f64> {
    require_positive("kappa", kappa)?;
    Ok((2.0 * chi / kappa).atan())
}

/// Coupling-level quantities for one qubit–resonator pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveCoupling {
    pub g: f64,
    pub delta: f64,
    pub alpha: f64,
    pub chi: f64,
    pub kappa: f64,
    pub phi: f64,
}

impl DispersiveCoupling {
    pub fn new(g: f64, delta: f64, alpha: f64, kappa: f64) -> Result<Self> {
        let chi = dispersive_shift(g, delta, alpha)?;
        let phi = dispersive_phase(chi, kappa)?;
        Ok(Self {
            g,
            delta,
            alpha,
            chi,
            kappa,
            phi,
        })
    }
}
