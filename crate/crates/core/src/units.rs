//! Physical constants and unit conversions.
//!
//! Rates are carried internally in angular units (rad/s) and frequencies in
//! Hz. The helpers here are the only places where 2π and the human-facing
//! prefixes (GHz, µm, fF, ns, µs, pH) are applied.

use std::f64::consts::TAU;

/// Elementary charge, C (exact, SI 2019).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J·s (exact, SI 2019).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

pub const GHZ: f64 = 1e9;
pub const MHZ: f64 = 1e6;
pub const KHZ: f64 = 1e3;
pub const UM: f64 = 1e-6;
pub const NS: f64 = 1e-9;
pub const US: f64 = 1e-6;
pub const FF: f64 = 1e-15;
pub const PH: f64 = 1e-12;
pub const NH: f64 = 1e-9;

/// Ordinary frequency (Hz) to angular rate (rad/s).
#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    TAU * f
}

/// Angular rate (rad/s) to ordinary frequency (Hz).
#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TAU
}

#[inline]
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    hz_to_angular(f_ghz * GHZ)
}

#[inline]
pub fn angular_to_ghz(omega: f64) -> f64 {
    angular_to_hz(omega) / GHZ
}
