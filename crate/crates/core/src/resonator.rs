//! Lumped-element spiral/TSV resonator design and extraction.
//!
//! The resonator is a kinetic-inductance spiral wound around a central disk
//! that lands on a TSV capacitor. Inductance follows from the number of
//! squares in the spiral trace times the film's sheet inductance; the
//! capacitance is a calibration input. All quantities are SI internally.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::fitting::models::{ExpDecayOffset, ExpFalloff, Line};
use crate::fitting::{least_squares, DataPoint, FitResult};
use crate::units::PH;

/// Relative disagreement tolerated between a supplied spiral length and the
/// one implied by the turn count.
pub const LENGTH_TOLERANCE: f64 = 0.05;

/// Over-coupling is declared when Q_i exceeds Q_c by this factor.
pub const OVERCOUPLED_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralGeometry {
    pub disk_radius: f64,
    pub line_width: f64,
    pub gap: f64,
    pub feed_offset: f64,
    pub spiral_length: f64,
    pub turns: u32,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl SpiralGeometry {
    pub fn builder() -> SpiralGeometryBuilder {
        SpiralGeometryBuilder::default()
    }

    /// Center-to-center distance between adjacent windings.
    pub fn pitch(&self) -> f64 {
        self.line_width + self.gap
    }

    pub fn squares(&self) -> f64 {
        self.spiral_length / self.line_width
    }

    /// Outer diameter of the wound spiral.
    pub fn outer_diameter(&self) -> f64 {
        2.0 * (self.disk_radius + self.turns as f64 * self.pitch())
    }

    /// Same geometry with a different trace length; the turn count follows.
    pub fn with_spiral_length(&self, spiral_length: f64) -> Result<Self> {
        SpiralGeometryBuilder {
            disk_radius: Some(self.disk_radius),
            line_width: Some(self.line_width),
            gap: Some(self.gap),
            feed_offset: Some(self.feed_offset),
            spiral_length: Some(spiral_length),
            turns: None,
        }
        .build()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SpiralGeometryBuilder {
    disk_radius: Option<f64>,
    line_width: Option<f64>,
    gap: Option<f64>,
    feed_offset: Option<f64>,
    spiral_length: Option<f64>,
    turns: Option<u32>,
}

impl SpiralGeometryBuilder {
    pub fn disk_radius(mut self, v: f64) -> Self {
        self.disk_radius = Some(v);
        self
    }

    pub fn line_width(mut self, v: f64) -> Self {
        self.line_width = Some(v);
        self
    }

    pub fn gap(mut self, v: f64) -> Self {
        self.gap = Some(v);
        self
    }

    pub fn feed_offset(mut self, v: f64) -> Self {
        self.feed_offset = Some(v);
        self
    }

    pub fn spiral_length(mut self, v: f64) -> Self {
        self.spiral_length = Some(v);
        self
    }

    pub fn turns(mut self, n: u32) -> Self {
        self.turns = Some(n);
        self
    }

    pub fn build(self) -> Result<SpiralGeometry> {
        let need = |v: Option<f64>, key: &str| {
            let v = v.ok_or_else(|| Error::validation(key, "is required"))?;
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::validation(key, format!("must be > 0, got {v}")))
            }
        };
        let disk_radius = need(self.disk_radius, "disk_radius")?;
        let line_width = need(self.line_width, "line_width")?;
        let gap = need(self.gap, "gap")?;
        let feed_offset = need(self.feed_offset, "feed_offset")?;
        let pitch = line_width + gap;

        let mut warnings = Vec::new();
        let (spiral_length, turns) = match (self.spiral_length, self.turns) {
            (_, Some(0)) => return Err(Error::validation("turns", "must be ≥ 1")),
            (None, None) => {
                return Err(Error::validation(
                    "turns",
                    "either turns or spiral_length is required",
                ))
            }
            (None, Some(n)) => (archimedean_length(disk_radius, pitch, n as f64), n),
            // Length alone: turns is derived, so there is nothing to disagree with.
            (Some(len), None) => {
                let len = need(Some(len), "spiral_length")?;
                (len, turns_for_length(disk_radius, pitch, len).round().max(1.0) as u32)
            }
            (Some(len), Some(n)) => {
                let len = need(Some(len), "spiral_length")?;
                let implied = archimedean_length(disk_radius, pitch, n as f64);
                let mismatch = (len - implied).abs() / implied;
                if mismatch > LENGTH_TOLERANCE {
                    let msg = format!(
                        "spiral_length {:.3e} m differs from the {n}-turn Archimedean length {:.3e} m by {:.1}%",
                        len,
                        implied,
                        100.0 * mismatch
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                (len, n)
            }
        };

        Ok(SpiralGeometry {
            disk_radius,
            line_width,
            gap,
            feed_offset,
            spiral_length,
            turns,
            warnings,
        })
    }
}

/// Arc length of an Archimedean spiral that starts at `start_radius` and
/// advances by `pitch` per turn, over `turns` turns.
pub fn archimedean_length(start_radius: f64, pitch: f64, turns: f64) -> f64 {
    let b = pitch / TAU;
    // ∫ √(ρ² + b²) dρ / b, with ρ the running radius.
    let primitive = |rho: f64| (rho * (rho * rho + b * b).sqrt() + b * b * (rho / b).asinh()) / (2.0 * b);
    primitive(start_radius + pitch * turns) - primitive(start_radius)
}

/// Fractional turn count whose Archimedean length equals `length`.
pub fn turns_for_length(start_radius: f64, pitch: f64, length: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while archimedean_length(start_radius, pitch, hi) < length {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if archimedean_length(start_radius, pitch, mid) < length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sheet-inductance properties of the resonator film, in H/□.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilmProperties {
    pub lk_nominal: f64,
    pub lk_low: f64,
    pub lk_high: f64,
    pub geometric_l_per_square: f64,
}

impl FilmProperties {
    /// Builds from values in pH/□ with no geometric contribution.
    pub fn from_ph(lk_nominal: f64, lk_low: f64, lk_high: f64) -> Result<Self> {
        Self::new(lk_nominal * PH, lk_low * PH, lk_high * PH, 0.0)
    }

    pub fn new(lk_nominal: f64, lk_low: f64, lk_high: f64, geometric_l_per_square: f64) -> Result<Self> {
        let film = Self {
            lk_nominal,
            lk_low,
            lk_high,
            geometric_l_per_square,
        };
        film.validate()?;
        Ok(film)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lk_low > 0.0 && self.lk_low <= self.lk_nominal && self.lk_nominal <= self.lk_high)
            || !self.lk_high.is_finite()
        {
            return Err(Error::validation(
                "lk_low/lk_nominal/lk_high",
                format!(
                    "band must satisfy 0 < lk_low ≤ lk_nominal ≤ lk_high, got {} ≤ {} ≤ {}",
                    self.lk_low / PH,
                    self.lk_nominal / PH,
                    self.lk_high / PH
                ),
            ));
        }
        if !(self.geometric_l_per_square >= 0.0) || !self.geometric_l_per_square.is_finite() {
            return Err(Error::validation(
                "geometric_l_per_square",
                "must be ≥ 0",
            ));
        }
        Ok(())
    }

    pub fn with_geometric(mut self, geometric_l_per_square: f64) -> Result<Self> {
        self.geometric_l_per_square = geometric_l_per_square;
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorMode {
    pub f_r: f64,
    pub q_coupling: f64,
    pub q_internal: Option<f64>,
    pub kappa: f64,
}

impl ResonatorMode {
    pub fn new(f_r: f64, q_coupling: f64, q_internal: Option<f64>) -> Result<Self> {
        let kappa = kappa_from_qc(f_r, q_coupling)?;
        if let Some(qi) = q_internal {
            require_positive("q_internal", qi)?;
        }
        Ok(Self {
            f_r,
            q_coupling,
            q_internal,
            kappa,
        })
    }

    /// Q_i > 10·Q_c. Unknown Q_i counts as not established.
    pub fn is_over_coupled(&self) -> bool {
        self.q_internal
            .is_some_and(|qi| qi > OVERCOUPLED_RATIO * self.q_coupling)
    }

    pub fn ringdown_time(&self) -> f64 {
        1.0 / self.kappa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    QuarterWave,
    HalfWave,
}

/// A CPW test resonator used for kinetic-inductance extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpwTestStructure {
    pub length: f64,
    /// Geometric (magnetic) inductance per unit length, H/m.
    pub l_per_length: f64,
    pub c_per_length: f64,
    pub termination: Termination,
}

impl CpwTestStructure {
    pub fn new(length: f64, l_per_length: f64, c_per_length: f64, termination: Termination) -> Result<Self> {
        require_positive("cpw length", length)?;
        require_positive("cpw l_per_length", l_per_length)?;
        require_positive("cpw c_per_length", c_per_length)?;
        Ok(Self {
            length,
            l_per_length,
            c_per_length,
            termination,
        })
    }

    fn require_quarter_wave(&self) -> Result<()> {
        match self.termination {
            Termination::QuarterWave => Ok(()),
            Termination::HalfWave => Err(Error::domain(
                "kinetic-inductance extraction supports quarter-wave structures only",
            )),
        }
    }
}

pub fn squares(spiral_length: f64, line_width: f64) -> Result<f64> {
    require_positive("spiral length", spiral_length)?;
    require_positive("line width", line_width)?;
    Ok(spiral_length / line_width)
}

/// Inductance of `n_squares` of film at its nominal sheet inductance.
pub fn total_inductance(n_squares: f64, film: &FilmProperties) -> Result<f64> {
    inductance_at(n_squares, film.lk_nominal, film.geometric_l_per_square)
}

fn inductance_at(n_squares: f64, lk: f64, geometric: f64) -> Result<f64> {
    require_positive("number of squares", n_squares)?;
    Ok(n_squares * (lk + geometric))
}

/// Lumped LC resonance 1/(2π√(LC)), Hz.
pub fn resonance_frequency(inductance: f64, capacitance: f64) -> Result<f64> {
    require_positive("inductance", inductance)?;
    require_positive("capacitance", capacitance)?;
    Ok(1.0 / (TAU * (inductance * capacitance).sqrt()))
}

/// Total shunt capacitance from TSV count and a per-TSV calibration constant.
pub fn tsv_capacitance(per_tsv: f64, n_tsv: u32, parasitic: f64) -> Result<f64> {
    require_positive("per-TSV capacitance", per_tsv)?;
    if n_tsv == 0 {
        return Err(Error::domain("at least one TSV is required"));
    }
    if !(parasitic >= 0.0) {
        return Err(Error::domain("parasitic capacitance must be ≥ 0"));
    }
    Ok(per_tsv * n_tsv as f64 + parasitic)
}

/// Resonance frequencies across the film's sheet-inductance band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyBand {
    pub f_low: f64,
    pub f_nominal: f64,
    pub f_high: f64,
}

impl FrequencyBand {
    /// 1 − f_low/f_high.
    pub fn fractional_width(&self) -> f64 {
        1.0 - self.f_low / self.f_high
    }

    pub fn contains(&self, f: f64) -> bool {
        self.f_low <= f && f <= self.f_high
    }
}

pub fn frequency_band(geom: &SpiralGeometry, film: &FilmProperties, c_total: f64) -> Result<FrequencyBand> {
    film.validate()?;
    require_positive("c_total", c_total)?;
    let n = squares(geom.spiral_length, geom.line_width)?;
    let at = |lk| resonance_frequency(inductance_at(n, lk, film.geometric_l_per_square)?, c_total);
    Ok(FrequencyBand {
        f_low: at(film.lk_high)?,
        f_nominal: at(film.lk_nominal)?,
        f_high: at(film.lk_low)?,
    })
}

/// Linewidth κ = ω_r/Q_c in rad/s.
pub fn kappa_from_qc(f_r: f64, q_c: f64) -> Result<f64> {
    require_positive("f_r", f_r)?;
    require_positive("q_c", q_c)?;
    Ok(TAU * f_r / q_c)
}

pub fn q_c_from_kappa(f_r: f64, kappa: f64) -> Result<f64> {
    require_positive("f_r", f_r)?;
    require_positive("kappa", kappa)?;
    Ok(TAU * f_r / kappa)
}

/// Phenomenological linewidth versus feedline offset, κ₀·exp(−d/d₀).
pub fn kappa_offset_model(d: f64, kappa0: f64, d0: f64) -> Result<f64> {
    require_positive("kappa0", kappa0)?;
    require_positive("d0", d0)?;
    if !(d >= 0.0) {
        return Err(Error::domain(format!("offset must be ≥ 0, got {d}")));
    }
    Ok(kappa0 * (-d / d0).exp())
}

/// Fitted κ(d) model: `params = [kappa0, d0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaOffsetFit {
    pub kappa0: f64,
    pub d0: f64,
    pub fit: FitResult,
}

/// Fits `κ₀·exp(−d/d₀)` to `(d, κ)` pairs.
pub fn fit_kappa_offset(points: &[(f64, f64)]) -> Result<KappaOffsetFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    if points.iter().any(|&(d, k)| !(d >= 0.0) || !(k > 0.0)) {
        return Err(Error::domain("κ(d) data need d ≥ 0 and κ > 0"));
    }
    // Log-linear seed: ln κ = ln κ₀ − d/d₀.
    let log_points: Vec<_> = points.iter().map(|&(d, k)| DataPoint::new(d, k.ln())).collect();
    let seed = least_squares(&Line, &log_points, &[-1.0 / mean_abs(points.iter().map(|p| p.0)), 0.0])?;
    let slope = seed.params[0];
    if !(slope < 0.0) {
        return Err(Error::FitFailure("κ does not decrease with offset".into()));
    }
    let init = [seed.params[1].exp(), -1.0 / slope];
    let data: Vec<_> = points.iter().map(|&(d, k)| DataPoint::new(d, k)).collect();
    let fit = least_squares(&ExpFalloff, &data, &init)?;
    if !(fit.params[0] > 0.0 && fit.params[1] > 0.0) {
        return Err(Error::FitFailure(format!("non-physical κ(d) parameters {:?}", fit.params)));
    }
    Ok(KappaOffsetFit {
        kappa0: fit.params[0],
        d0: fit.params[1],
        fit,
    })
}

fn mean_abs(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v.abs(), n + 1));
    if n == 0 || sum == 0.0 {
        1.0
    } else {
        sum / n as f64
    }
}

/// Fundamental of an ideal quarter-wave CPW with kinetic sheet inductance
/// `lk` (H/□) and extra per-square inductance `geometric_l_per_square`.
pub fn cpw_quarter_wave_frequency(
    structure: &CpwTestStructure,
    lk: f64,
    geometric_l_per_square: f64,
    line_width: f64,
) -> Result<f64> {
    structure.require_quarter_wave()?;
    require_positive("line width", line_width)?;
    if !(lk >= 0.0) {
        return Err(Error::domain("kinetic inductance must be ≥ 0"));
    }
    let l_total = structure.l_per_length + (lk + geometric_l_per_square) / line_width;
    Ok(1.0 / (4.0 * structure.length * (l_total * structure.c_per_length).sqrt()))
}

/// Inverts the quarter-wave relation for the kinetic sheet inductance, H/□.
///
/// `geometric_l_per_square` is any non-kinetic sheet term to subtract;
/// the structure's own `l_per_length` carries the magnetic inductance.
pub fn extract_lk_cpw(
    measured_f: f64,
    structure: &CpwTestStructure,
    geometric_l_per_square: f64,
    line_width: f64,
) -> Result<f64> {
    structure.require_quarter_wave()?;
    require_positive("measured frequency", measured_f)?;
    require_positive("line width", line_width)?;
    let l_total = 1.0 / ((4.0 * structure.length * measured_f).powi(2) * structure.c_per_length);
    let per_square = (l_total - structure.l_per_length) * line_width;
    let lk = per_square - geometric_l_per_square;
    // Values within rounding of zero are an L_k = 0 structure, not an error.
    let tolerance = 1e-12 * structure.l_per_length * line_width;
    if lk < -tolerance {
        return Err(Error::FitDomain(format!(
            "measured frequency {measured_f:.6e} Hz implies negative kinetic inductance ({:.4} pH/□)",
            lk / PH
        )));
    }
    Ok(lk.max(0.0))
}

/// Result of a ring-down fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RingdownFit {
    pub kappa: f64,
    pub kappa_err: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub fit: FitResult,
}

impl RingdownFit {
    pub fn lifetime(&self) -> f64 {
        1.0 / self.kappa
    }
}

pub const MIN_RINGDOWN_SAMPLES: usize = 8;

/// Fits `V(t) = V₀·exp(−κt/2) + offset` to an amplitude ring-down trace of
/// `(t, v)` samples sorted by time.
pub fn fit_kappa_ringdown(trace: &[(f64, f64)]) -> Result<RingdownFit> {
    if trace.len() < MIN_RINGDOWN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_RINGDOWN_SAMPLES,
            got: trace.len(),
        });
    }
    if trace.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::domain("ring-down trace contains non-finite samples"));
    }
    if trace.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::domain("ring-down times must be strictly increasing"));
    }
    let (vmin, vmax) = trace
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    if vmax - vmin <= 1e-12 * vmax.abs().max(vmin.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::FitFailure("trace is constant; nothing decays".into()));
    }

    let t0 = trace[0].0;
    let span = trace[trace.len() - 1].0 - t0;
    let (v0, rate, offset) = ringdown_seed(trace, vmin)?;
    // Fit in time relative to the first sample so the amplitude is V(t0).
    let data: Vec<_> = trace.iter().map(|&(t, v)| DataPoint::new(t - t0, v)).collect();
    let fit = least_squares(&ExpDecayOffset, &data, &[v0, rate, offset])?;
    let kappa = fit.params[1];
    if !(kappa > 0.0) || !(fit.params[0] > 0.0) {
        return Err(Error::FitFailure(format!(
            "trace does not decay (fitted κ = {kappa:.4e} s⁻¹)"
        )));
    }
    let decay_constants = span * kappa / 2.0;
    if decay_constants < 2.0 {
        return Err(Error::domain(format!(
            "trace spans {decay_constants:.2} amplitude decay constants; at least 2 are required"
        )));
    }
    Ok(RingdownFit {
        kappa,
        kappa_err: fit.std_errors[1],
        amplitude: fit.params[0],
        offset: fit.params[2],
        fit,
    })
}

// Three-point estimate from window averages at the start, middle and end of
// the trace: for equally spaced samples of a·rⁿ + c the offset is
// (y₀y₂ − y₁²)/(y₀ + y₂ − 2y₁).
fn ringdown_seed(trace: &[(f64, f64)], vmin: f64) -> Result<(f64, f64, f64)> {
    let n = trace.len();
    let w = (n / 20).max(1);
    let window_mean = |center: usize| {
        let lo = center.saturating_sub(w / 2);
        let hi = (lo + w).min(n);
        let slice = &trace[lo..hi];
        let t = slice.iter().map(|p| p.0).sum::<f64>() / slice.len() as f64;
        let v = slice.iter().map(|p| p.1).sum::<f64>() / slice.len() as f64;
        (t, v)
    };
    let (ta, ya) = window_mean(w / 2);
    let (tb, yb) = window_mean(n / 2);
    let (tc, yc) = window_mean(n - 1 - w / 2);
    let t0 = trace[0].0;

    let denom = ya + yc - 2.0 * yb;
    let ratio = (yc - yb) / (yb - ya);
    let half_step = 0.5 * ((tb - ta) + (tc - tb));
    if denom.abs() > 0.0 && ratio > 0.0 && ratio < 1.0 && half_step > 0.0 {
        let offset = (ya * yc - yb * yb) / denom;
        let rate = -2.0 * ratio.ln() / half_step;
        let amp = (ya - offset) * (rate * (ta - t0) / 2.0).exp();
        if rate.is_finite() && amp > 0.0 {
            return Ok((amp, rate, offset));
        }
    }
    if !(ya > yc) {
        return Err(Error::FitFailure("trace does not decay".into()));
    }
    // Fallback: offset at the floor, rate from the first and last windows.
    let floor = vmin - 1e-3 * (ya - vmin).abs();
    let rate = 2.0 * ((ya - floor) / (yc - floor)).ln() / (tc - ta);
    let amp = (ya - floor) * (rate * (ta - t0) / 2.0).exp();
    Ok((amp, rate.max(f64::MIN_POSITIVE), floor))
}

/// One row of a spiral-length sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub spiral_length: f64,
    pub turns: u32,
    pub band: FrequencyBand,
}

/// Evaluates the band for each spiral length; pure per point.
pub fn sweep_spiral_lengths(
    template: &SpiralGeometry,
    film: &FilmProperties,
    c_total: f64,
    lengths: &[f64],
) -> Result<Vec<SweepPoint>> {
    lengths
        .iter()
        .map(|&len| {
            let geom = template.with_spiral_length(len)?;
            Ok(SweepPoint {
                spiral_length: len,
                turns: geom.turns,
                band: frequency_band(&geom, film, c_total)?,
            })
        })
        .collect()
}

/// Mean absolute and mean relative deviation of measured frequencies from
/// the nominal prediction.
pub fn prediction_deviation(predicted: &[f64], measured: &[f64]) -> Result<(f64, f64)> {
    if predicted.len() != measured.len() || predicted.is_empty() {
        return Err(Error::domain("prediction and measurement lists must be non-empty and equal length"));
    }
    let n = predicted.len() as f64;
    let abs = predicted.iter().zip(measured).map(|(p, m)| (p - m).abs()).sum::<f64>() / n;
    let rel = predicted.iter().zip(measured).map(|(p, m)| (p - m).abs() / p).sum::<f64>() / n;
    Ok((abs, rel))
}
