//! Run configuration: TOML in lab units (GHz, µm, pH, fF, ns), converted to SI on ingestion.
//!
//! Every section rejects unknown keys. Optional keys are filled by
//! [`RunConfig::resolve`], and the resolved form is what gets echoed into the
//! report, so a report is itself a loadable config.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coherence::{LossModel, PurcellCoupling};
use crate::error::{Error, Result};
use crate::physics::{charging_energy, coupling_from_chi, TransmonParams};
use crate::readout::{calibrate_epsilon, ReadoutConfig};
use crate::resonator::{tsv_capacitance, CpwTestStructure, FilmProperties, SpiralGeometry, Termination};
use crate::units::{FF, GHZ, KHZ, MHZ, NS, PH, UM};

pub const DEFAULT_OUTPUT_DIR: &str = "qreadout-out";
pub const DEFAULT_SHOTS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub film: Option<FilmSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacitance: Option<CapacitanceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonator: Option<ResonatorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cpw: Option<CpwSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<KappaSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transmon: Option<TransmonSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherence: Option<CoherenceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Default: `$QREADOUT_OUT_DIR`, else `qreadout-out`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Default false.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_plots: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub disk_radius_um: f64,
    pub line_width_um: f64,
    pub gap_um: f64,
    pub feed_offset_um: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub turns: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spiral_length_um: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmSection {
    pub lk_nominal_ph: f64,
    /// Default: lk_nominal_ph.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lk_low_ph: Option<f64>,
    /// Default: lk_nominal_ph.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lk_high_ph: Option<f64>,
    /// Geometric inductance per square, default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometric_ph: Option<f64>,
}

/// Either `total_ff`, or `per_tsv_ff` with `n_tsv` (default 1) and
/// `parasitic_ff` (default 0).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitanceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_ff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_tsv_ff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_tsv: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parasitic_ff: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_i: Option<f64>,
}

/// Spiral lengths come from `spiral_lengths_um`, from
/// `start_um`/`stop_um`/`points`, or from the lengths in `measured_csv`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spiral_lengths_um: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpwSection {
    pub length_um: f64,
    pub line_width_um: f64,
    /// Magnetic inductance per length.
    pub l_geo_ph_per_um: f64,
    pub c_ff_per_um: f64,
    /// Default "quarter-wave".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    /// Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometric_ph: Option<f64>,
    pub measured_f_ghz: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ringdown_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset_csv: Option<PathBuf>,
}

/// `ec_ghz` or `shunt_ff` sets E_C; each `flux` entry (Φ/Φ₀) yields one
/// qubit frequency.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonSection {
    pub ej_total_ghz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ec_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shunt_ff: Option<f64>,
    /// Default [0.0].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_diel: Option<f64>,
    /// Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_phi_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purcell: Option<PurcellSection>,
}

/// Linewidth from `kappa_per_s` or `inv_kappa_ns`; coupling from `g_mhz`
/// (g/2π) or back-computed from `two_chi_khz` with `anharmonicity_mhz` at
/// `reference_f_q_ghz`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurcellSection {
    pub resonator_ghz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inv_kappa_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_chi_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anharmonicity_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_f_q_ghz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceSection {
    pub data_csv: PathBuf,
}

/// Qubit frequencies from `f_q_ghz`, from `start_ghz`/`stop_ghz`/`points`,
/// or from the `[transmon]` section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_q_ghz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

/// Drive from `epsilon_per_s`, or calibrated so the closed-form SNR equals
/// `target_snr` at `calibration_tau_ns` (default `tau_ns`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inv_kappa_ns: Option<f64>,
    /// Full dispersive splitting 2χ/2π.
    pub two_chi_khz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_snr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration_tau_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_list_ns: Option<Vec<f64>>,
    /// Default 10000 per state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_shots: Option<usize>,
    /// Default false.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transient: Option<bool>,
}

/// Reads and validates a config file. Relative data paths are resolved
/// against the file's directory.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut cfg = parse_config_str(&text)?;
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let base = fs::canonicalize(parent).unwrap_or_else(|_| parent.to_path_buf());
    cfg.rebase_paths(&base);
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::Parse {
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn invalid(key: &str, constraint: impl Into<String>) -> Error {
    Error::Validation {
        key: key.to_string(),
        constraint: constraint.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be ≥ 0, got {v}")))
    }
}

fn opt<T: Copy>(v: Option<T>, f: impl FnOnce(T) -> Result<()>) -> Result<()> {
    v.map_or(Ok(()), f)
}

fn exactly_one(keys: [&str; 2], present: [bool; 2]) -> Result<()> {
    match present {
        [true, false] | [false, true] => Ok(()),
        [true, true] => Err(invalid(keys[0], format!("give either `{}` or `{}`, not both", keys[0], keys[1]))),
        [false, false] => Err(invalid(keys[0], format!("one of `{}` or `{}` is required", keys[0], keys[1]))),
    }
}

/// `start`/`stop`/`points` grid, inclusive of both ends.
fn linear_grid(prefix: &str, start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(invalid(&format!("{prefix}.points"), "must be ≥ 2"));
    }
    if !(stop > start) {
        return Err(invalid(&format!("{prefix}.stop"), "must exceed start"));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points).map(|k| start + step * k as f64).collect())
}

fn grid_or_list(
    prefix: &str,
    list_key: &str,
    list: &Option<Vec<f64>>,
    range: (Option<f64>, Option<f64>, Option<usize>),
) -> Result<Option<Vec<f64>>> {
    match (list, range) {
        (Some(_), (None, None, None)) => Ok(list.clone()),
        (None, (Some(a), Some(b), Some(n))) => linear_grid(prefix, a, b, n).map(Some),
        (None, (None, None, None)) => Ok(None),
        (Some(_), _) => Err(invalid(
            &format!("{prefix}.{list_key}"),
            "cannot be combined with a start/stop/points range",
        )),
        (None, _) => Err(invalid(prefix, "a range needs all of start, stop and points")),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.geometry {
            positive("geometry.disk_radius_um", g.disk_radius_um)?;
            positive("geometry.line_width_um", g.line_width_um)?;
            positive("geometry.gap_um", g.gap_um)?;
            positive("geometry.feed_offset_um", g.feed_offset_um)?;
            opt(g.spiral_length_um, |v| positive("geometry.spiral_length_um", v))?;
            if g.turns == Some(0) {
                return Err(invalid("geometry.turns", "must be ≥ 1"));
            }
            if g.turns.is_none() && g.spiral_length_um.is_none() && self.sweep.is_none() {
                return Err(invalid("geometry.turns", "either turns or spiral_length_um is required"));
            }
        }
        if let Some(f) = &self.film {
            positive("film.lk_nominal_ph", f.lk_nominal_ph)?;
            opt(f.lk_low_ph, |v| positive("film.lk_low_ph", v))?;
            opt(f.lk_high_ph, |v| positive("film.lk_high_ph", v))?;
            opt(f.geometric_ph, |v| non_negative("film.geometric_ph", v))?;
            let low = f.lk_low_ph.unwrap_or(f.lk_nominal_ph);
            let high = f.lk_high_ph.unwrap_or(f.lk_nominal_ph);
            if low > high {
                return Err(invalid(
                    "film.lk_low_ph",
                    format!("band constraint lk_low_ph ≤ lk_high_ph violated ({low} > {high})"),
                ));
            }
            if !(low <= f.lk_nominal_ph && f.lk_nominal_ph <= high) {
                return Err(invalid(
                    "film.lk_nominal_ph",
                    format!("band constraint lk_low_ph ≤ lk_nominal_ph ≤ lk_high_ph violated ({low}, {}, {high})", f.lk_nominal_ph),
                ));
            }
        }
        if let Some(c) = &self.capacitance {
            exactly_one(["capacitance.total_ff", "capacitance.per_tsv_ff"], [c.total_ff.is_some(), c.per_tsv_ff.is_some()])?;
            opt(c.total_ff, |v| positive("capacitance.total_ff", v))?;
            opt(c.per_tsv_ff, |v| positive("capacitance.per_tsv_ff", v))?;
            opt(c.parasitic_ff, |v| non_negative("capacitance.parasitic_ff", v))?;
            if c.n_tsv == Some(0) {
                return Err(invalid("capacitance.n_tsv", "must be ≥ 1"));
            }
            if c.total_ff.is_some() && (c.n_tsv.is_some() || c.parasitic_ff.is_some()) {
                return Err(invalid("capacitance.total_ff", "cannot be combined with n_tsv or parasitic_ff"));
            }
        }
        if let Some(r) = &self.resonator {
            opt(r.q_c, |v| positive("resonator.q_c", v))?;
            opt(r.q_i, |v| positive("resonator.q_i", v))?;
        }
        if let Some(s) = &self.sweep {
            let lengths = grid_or_list("sweep", "spiral_lengths_um", &s.spiral_lengths_um, (s.start_um, s.stop_um, s.points))?;
            for v in lengths.iter().flatten() {
                positive("sweep.spiral_lengths_um", *v)?;
            }
            if lengths.is_none() && s.measured_csv.is_none() {
                return Err(invalid("sweep.spiral_lengths_um", "give a list, a start/stop/points range, or measured_csv"));
            }
        }
        if let Some(c) = &self.cpw {
            positive("cpw.length_um", c.length_um)?;
            positive("cpw.line_width_um", c.line_width_um)?;
            positive("cpw.l_geo_ph_per_um", c.l_geo_ph_per_um)?;
            positive("cpw.c_ff_per_um", c.c_ff_per_um)?;
            opt(c.geometric_ph, |v| non_negative("cpw.geometric_ph", v))?;
            if c.termination == Some(Termination::HalfWave) {
                return Err(invalid("cpw.termination", "only quarter-wave structures can be inverted"));
            }
            if c.measured_f_ghz.is_empty() {
                return Err(invalid("cpw.measured_f_ghz", "must list at least one frequency"));
            }
            for &f in &c.measured_f_ghz {
                positive("cpw.measured_f_ghz", f)?;
            }
        }
        if let Some(k) = &self.kappa {
            if k.ringdown_csv.is_none() && k.offset_csv.is_none() {
                return Err(invalid("kappa.ringdown_csv", "one of ringdown_csv or offset_csv is required"));
            }
        }
        if let Some(t) = &self.transmon {
            positive("transmon.ej_total_ghz", t.ej_total_ghz)?;
            exactly_one(["transmon.ec_ghz", "transmon.shunt_ff"], [t.ec_ghz.is_some(), t.shunt_ff.is_some()])?;
            opt(t.ec_ghz, |v| positive("transmon.ec_ghz", v))?;
            opt(t.shunt_ff, |v| positive("transmon.shunt_ff", v))?;
            if let Some(flux) = &t.flux {
                if flux.is_empty() {
                    return Err(invalid("transmon.flux", "must not be empty"));
                }
                if flux.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("transmon.flux", "must be finite"));
                }
            }
        }
        if let Some(l) = &self.loss {
            opt(l.q_diel, |v| positive("loss.q_diel", v))?;
            opt(l.gamma_phi_per_s, |v| non_negative("loss.gamma_phi_per_s", v))?;
            if let Some(p) = &l.purcell {
                positive("loss.purcell.resonator_ghz", p.resonator_ghz)?;
                exactly_one(
                    ["loss.purcell.kappa_per_s", "loss.purcell.inv_kappa_ns"],
                    [p.kappa_per_s.is_some(), p.inv_kappa_ns.is_some()],
                )?;
                opt(p.kappa_per_s, |v| positive("loss.purcell.kappa_per_s", v))?;
                opt(p.inv_kappa_ns, |v| positive("loss.purcell.inv_kappa_ns", v))?;
                exactly_one(
                    ["loss.purcell.g_mhz", "loss.purcell.two_chi_khz"],
                    [p.g_mhz.is_some(), p.two_chi_khz.is_some()],
                )?;
                opt(p.g_mhz, |v| non_negative("loss.purcell.g_mhz", v))?;
                if p.two_chi_khz.is_some() {
                    if p.anharmonicity_mhz.is_none() {
                        return Err(invalid("loss.purcell.anharmonicity_mhz", "is required with two_chi_khz"));
                    }
                    match p.reference_f_q_ghz {
                        None => return Err(invalid("loss.purcell.reference_f_q_ghz", "is required with two_chi_khz")),
                        Some(v) => positive("loss.purcell.reference_f_q_ghz", v)?,
                    }
                }
            }
        }
        if let Some(b) = &self.budget {
            let f = grid_or_list("budget", "f_q_ghz", &b.f_q_ghz, (b.start_ghz, b.stop_ghz, b.points))?;
            for v in f.iter().flatten() {
                positive("budget.f_q_ghz", *v)?;
            }
        }
        if let Some(r) = &self.readout {
            exactly_one(
                ["readout.kappa_per_s", "readout.inv_kappa_ns"],
                [r.kappa_per_s.is_some(), r.inv_kappa_ns.is_some()],
            )?;
            opt(r.kappa_per_s, |v| positive("readout.kappa_per_s", v))?;
            opt(r.inv_kappa_ns, |v| positive("readout.inv_kappa_ns", v))?;
            if !r.two_chi_khz.is_finite() || r.two_chi_khz == 0.0 {
                return Err(invalid("readout.two_chi_khz", "must be finite and non-zero"));
            }
            exactly_one(
                ["readout.epsilon_per_s", "readout.target_snr"],
                [r.epsilon_per_s.is_some(), r.target_snr.is_some()],
            )?;
            opt(r.epsilon_per_s, |v| non_negative("readout.epsilon_per_s", v))?;
            opt(r.target_snr, |v| non_negative("readout.target_snr", v))?;
            opt(r.calibration_tau_ns, |v| positive("readout.calibration_tau_ns", v))?;
            opt(r.tau_ns, |v| positive("readout.tau_ns", v))?;
            if r.target_snr.is_some() && r.calibration_tau_ns.is_none() && r.tau_ns.is_none() {
                return Err(invalid("readout.calibration_tau_ns", "is required with target_snr when tau_ns is absent"));
            }
            if let Some(list) = &r.tau_list_ns {
                if list.is_empty() {
                    return Err(invalid("readout.tau_list_ns", "must not be empty"));
                }
                for &t in list {
                    positive("readout.tau_list_ns", t)?;
                }
            }
            if r.n_shots == Some(0) {
                return Err(invalid("readout.n_shots", "must be ≥ 1"));
            }
        }
        Ok(())
    }

    fn rebase_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(s) = &mut self.sweep {
            s.measured_csv.as_mut().map(fix);
        }
        if let Some(k) = &mut self.kappa {
            k.ringdown_csv.as_mut().map(fix);
            k.offset_csv.as_mut().map(fix);
        }
        if let Some(c) = &mut self.coherence {
            fix(&mut c.data_csv);
        }
        if let Some(d) = &mut self.run.output_dir {
            fix(d);
        }
    }

    /// Copy with every documented default written out, `seed` and
    /// `output_dir` applied.
    pub fn resolve(&self, seed: Option<u64>, output_dir: Option<PathBuf>) -> RunConfig {
        let mut cfg = self.clone();
        cfg.run.seed = Some(seed.or(cfg.run.seed).unwrap_or(DEFAULT_SEED));
        cfg.run.output_dir = Some(output_dir.or(cfg.run.output_dir).unwrap_or_else(default_output_dir));
        cfg.run.emit_plots.get_or_insert(false);
        if let Some(f) = &mut cfg.film {
            f.lk_low_ph.get_or_insert(f.lk_nominal_ph);
            f.lk_high_ph.get_or_insert(f.lk_nominal_ph);
            f.geometric_ph.get_or_insert(0.0);
        }
        if let Some(c) = &mut cfg.capacitance {
            if c.per_tsv_ff.is_some() {
                c.n_tsv.get_or_insert(1);
                c.parasitic_ff.get_or_insert(0.0);
            }
        }
        if let Some(c) = &mut cfg.cpw {
            c.termination.get_or_insert(Termination::QuarterWave);
            c.geometric_ph.get_or_insert(0.0);
        }
        if let Some(t) = &mut cfg.transmon {
            t.flux.get_or_insert_with(|| vec![0.0]);
        }
        if let Some(l) = &mut cfg.loss {
            l.gamma_phi_per_s.get_or_insert(0.0);
        }
        if let Some(r) = &mut cfg.readout {
            r.n_shots.get_or_insert(DEFAULT_SHOTS);
            r.transient.get_or_insert(false);
            if r.target_snr.is_some() && r.calibration_tau_ns.is_none() {
                r.calibration_tau_ns = r.tau_ns;
            }
        }
        cfg
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.run.output_dir.clone().unwrap_or_else(default_output_dir)
    }

    pub fn emit_plots(&self) -> bool {
        self.run.emit_plots.unwrap_or(false)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::domain(format!("cannot serialize config: {e}")))
    }

    fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| invalid(name, "section is required by this command"))
    }

    /// Geometry with an optional spiral-length override (µm already in m).
    pub fn spiral_geometry(&self) -> Result<SpiralGeometry> {
        let g = Self::section(&self.geometry, "geometry")?;
        let mut b = SpiralGeometry::builder()
            .disk_radius(g.disk_radius_um * UM)
            .line_width(g.line_width_um * UM)
            .gap(g.gap_um * UM)
            .feed_offset(g.feed_offset_um * UM);
        if let Some(n) = g.turns {
            b = b.turns(n);
        }
        match g.spiral_length_um {
            Some(len) => b = b.spiral_length(len * UM),
            // Sweeps only need a template; one turn is replaced per point.
            None if g.turns.is_none() => b = b.turns(1),
            None => {}
        }
        b.build()
    }

    pub fn film_properties(&self) -> Result<FilmProperties> {
        let f = Self::section(&self.film, "film")?;
        FilmProperties::new(
            f.lk_nominal_ph * PH,
            f.lk_low_ph.unwrap_or(f.lk_nominal_ph) * PH,
            f.lk_high_ph.unwrap_or(f.lk_nominal_ph) * PH,
            f.geometric_ph.unwrap_or(0.0) * PH,
        )
    }

    pub fn total_capacitance(&self) -> Result<f64> {
        let c = Self::section(&self.capacitance, "capacitance")?;
        match (c.total_ff, c.per_tsv_ff) {
            (Some(total), _) => Ok(total * FF),
            (None, Some(per)) => tsv_capacitance(per * FF, c.n_tsv.unwrap_or(1), c.parasitic_ff.unwrap_or(0.0) * FF),
            (None, None) => Err(invalid("capacitance.total_ff", "is required")),
        }
    }

    /// Spiral lengths in metres, unless they are to be taken from the
    /// measured-data file.
    pub fn sweep_lengths(&self) -> Result<Option<Vec<f64>>> {
        let s = Self::section(&self.sweep, "sweep")?;
        let um = grid_or_list("sweep", "spiral_lengths_um", &s.spiral_lengths_um, (s.start_um, s.stop_um, s.points))?;
        Ok(um.map(|v| v.into_iter().map(|x| x * UM).collect()))
    }

    pub fn cpw_structure(&self) -> Result<(CpwTestStructure, f64, f64, Vec<f64>)> {
        let c = Self::section(&self.cpw, "cpw")?;
        let s = CpwTestStructure::new(
            c.length_um * UM,
            c.l_geo_ph_per_um * PH / UM,
            c.c_ff_per_um * FF / UM,
            c.termination.unwrap_or(Termination::QuarterWave),
        )?;
        let freqs = c.measured_f_ghz.iter().map(|f| f * GHZ).collect();
        Ok((s, c.geometric_ph.unwrap_or(0.0) * PH, c.line_width_um * UM, freqs))
    }

    pub fn kappa_section(&self) -> Result<&KappaSection> {
        Self::section(&self.kappa, "kappa")
    }

    pub fn coherence_csv(&self) -> Result<&Path> {
        Ok(&Self::section(&self.coherence, "coherence")?.data_csv)
    }

    pub fn purcell(&self) -> Result<Option<PurcellCoupling>> {
        let Some(p) = self.loss.as_ref().and_then(|l| l.purcell.as_ref()) else {
            return Ok(None);
        };
        let omega_r = TAU * p.resonator_ghz * GHZ;
        let kappa = match (p.kappa_per_s, p.inv_kappa_ns) {
            (Some(k), _) => k,
            (None, Some(t)) => 1.0 / (t * NS),
            _ => return Err(invalid("loss.purcell.kappa_per_s", "is required")),
        };
        let g = match (p.g_mhz, p.two_chi_khz) {
            (Some(g), _) => TAU * g * MHZ,
            (None, Some(two_chi)) => {
                let chi = TAU * two_chi * KHZ / 2.0;
                let alpha = TAU * p.anharmonicity_mhz.unwrap_or(0.0) * MHZ;
                let delta = TAU * p.reference_f_q_ghz.unwrap_or(0.0) * GHZ - omega_r;
                // The measured splitting is a magnitude; its sign follows from Δ and α.
                let signed = chi.abs().copysign(delta * (delta + alpha) / alpha);
                coupling_from_chi(signed, delta, alpha)?
            }
            _ => return Err(invalid("loss.purcell.g_mhz", "is required")),
        };
        Ok(Some(PurcellCoupling::new(g, omega_r, kappa)?))
    }

    pub fn loss_model(&self) -> Result<LossModel> {
        let l = Self::section(&self.loss, "loss")?;
        let q = l.q_diel.ok_or_else(|| invalid("loss.q_diel", "is required by this command"))?;
        let mut model = LossModel::dielectric(q)?.with_dephasing(l.gamma_phi_per_s.unwrap_or(0.0))?;
        if let Some(p) = self.purcell()? {
            model = model.with_purcell(p);
        }
        Ok(model)
    }

    /// Qubit frequencies (Hz) for the T1 budget.
    pub fn budget_frequencies(&self) -> Result<Vec<f64>> {
        if let Some(b) = &self.budget {
            if let Some(f) = grid_or_list("budget", "f_q_ghz", &b.f_q_ghz, (b.start_ghz, b.stop_ghz, b.points))? {
                return Ok(f.into_iter().map(|x| x * GHZ).collect());
            }
        }
        if let Some(t) = &self.transmon {
            let ec = match (t.ec_ghz, t.shunt_ff) {
                (Some(ec), _) => ec,
                (None, Some(c)) => charging_energy(c * FF)?,
                _ => return Err(invalid("transmon.ec_ghz", "is required")),
            };
            let flux = t.flux.clone().unwrap_or_else(|| vec![0.0]);
            return flux
                .iter()
                .map(|&phi| Ok(TransmonParams::new(t.ej_total_ghz, ec, phi)?.frequency_ghz()? * GHZ))
                .collect();
        }
        Err(invalid("budget.f_q_ghz", "give [budget] frequencies or a [transmon] section"))
    }

    /// Readout parameters in SI, drive calibrated if requested. `tau_m` is
    /// taken from `tau_ns` when present, else from the calibration point.
    pub fn readout_config(&self) -> Result<ReadoutConfig> {
        let r = Self::section(&self.readout, "readout")?;
        let kappa = match (r.kappa_per_s, r.inv_kappa_ns) {
            (Some(k), _) => k,
            (None, Some(t)) => 1.0 / (t * NS),
            _ => return Err(invalid("readout.kappa_per_s", "is required")),
        };
        let chi = TAU * r.two_chi_khz * KHZ / 2.0;
        let tau_m = r.tau_ns.or(r.calibration_tau_ns).map(|t| t * NS);
        let epsilon = match (r.epsilon_per_s, r.target_snr) {
            (Some(e), _) => e,
            (None, Some(target)) => {
                let cal = r
                    .calibration_tau_ns
                    .or(r.tau_ns)
                    .ok_or_else(|| invalid("readout.calibration_tau_ns", "is required with target_snr"))?;
                calibrate_epsilon(kappa, chi, cal * NS, target)?
            }
            _ => return Err(invalid("readout.epsilon_per_s", "is required")),
        };
        let cfg = ReadoutConfig {
            epsilon,
            kappa,
            chi,
            tau_m: tau_m.unwrap_or(f64::NAN),
            n_shots: r.n_shots.unwrap_or(DEFAULT_SHOTS),
            seed: self.seed(),
            transient: r.transient.unwrap_or(false),
        };
        Ok(cfg)
    }

    pub fn tau_list(&self) -> Result<Vec<f64>> {
        let r = Self::section(&self.readout, "readout")?;
        let list = r
            .tau_list_ns
            .as_ref()
            .ok_or_else(|| invalid("readout.tau_list_ns", "is required by snr-sweep"))?;
        Ok(list.iter().map(|t| t * NS).collect())
    }
}

/// `$QREADOUT_OUT_DIR` if set and non-empty, else [`DEFAULT_OUTPUT_DIR`].
pub fn default_output_dir() -> PathBuf {
    match std::env::var_os("QREADOUT_OUT_DIR") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const READOUT: &str = r#"
[run]
seed = 2024

[readout]
inv_kappa_ns = 300
two_chi_khz = 930
target_snr = 5.0
tau_ns = 700
"#;

    fn key_of(err: Error) -> String {
        match err {
            Error::Validation { key, .. } => key,
            other => panic!("expected a validation error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = parse_config_str(READOUT).unwrap();
        let resolved = cfg.resolve(None, Some(PathBuf::from("out")));
        let r = resolved.readout.as_ref().unwrap();
        assert_eq!(r.n_shots, Some(DEFAULT_SHOTS));
        assert_eq!(r.transient, Some(false));
        assert_eq!(r.calibration_tau_ns, Some(700.0));
        assert_eq!(resolved.run.emit_plots, Some(false));
        assert_eq!(resolved.seed(), 2024);

        let rc = resolved.readout_config().unwrap();
        assert!((rc.kappa * 300e-9 - 1.0).abs() < 1e-12);
        assert!((rc.chi - TAU * 465e3).abs() < 1e-6);
        assert!((crate::readout::snr_asymptotic(&rc).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn seed_override_wins() {
        let cfg = parse_config_str(READOUT).unwrap();
        assert_eq!(cfg.resolve(Some(7), None).seed(), 7);
        assert_eq!(RunConfig::default().resolve(None, None).seed(), DEFAULT_SEED);
    }

    #[test]
    fn resolved_config_reparses_to_itself() {
        let cfg = parse_config_str(READOUT).unwrap().resolve(Some(11), Some(PathBuf::from("/tmp/x")));
        let again = parse_config_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.resolve(None, None), cfg);
    }

    #[test]
    fn inverted_band_names_the_constraint() {
        let text = "[film]\nlk_nominal_ph = 2.1\nlk_low_ph = 2.2\nlk_high_ph = 2.0\n";
        match parse_config_str(text).unwrap_err() {
            Error::Validation { key, constraint } => {
                assert_eq!(key, "film.lk_low_ph");
                assert!(constraint.contains("band constraint"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_line() {
        let text = "[run]\nseed = 1\n\n[readout]\ninv_kappa_ns = 300\ntwo_chi_khz = 930\nepsilon_per_s = 1.0\nbogus = 3\n";
        match parse_config_str(text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 8);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse_config_str("[run]\nseed = = 3\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn conflicting_and_missing_alternatives() {
        let both = "[readout]\nkappa_per_s = 1e6\ninv_kappa_ns = 300\ntwo_chi_khz = 930\nepsilon_per_s = 1\n";
        assert_eq!(key_of(parse_config_str(both).unwrap_err()), "readout.kappa_per_s");
        let none = "[readout]\ntwo_chi_khz = 930\nepsilon_per_s = 1\n";
        assert_eq!(key_of(parse_config_str(none).unwrap_err()), "readout.kappa_per_s");
        let neg = "[geometry]\ndisk_radius_um = -1\nline_width_um = 2\ngap_um = 2\nfeed_offset_um = 5\nturns = 3\n";
        assert_eq!(key_of(parse_config_str(neg).unwrap_err()), "geometry.disk_radius_um");
    }

    #[test]
    fn missing_section_is_named() {
        let cfg = parse_config_str(READOUT).unwrap();
        assert_eq!(key_of(cfg.film_properties().unwrap_err()), "film");
        assert_eq!(key_of(cfg.tau_list().unwrap_err()), "readout.tau_list_ns");
    }

    #[test]
    fn capacitance_forms() {
        let a = parse_config_str("[capacitance]\ntotal_ff = 85\n").unwrap();
        assert!((a.total_capacitance().unwrap() - 85e-15).abs() < 1e-27);
        let b = parse_config_str("[capacitance]\nper_tsv_ff = 40\nn_tsv = 2\nparasitic_ff = 5\n").unwrap();
        assert!((b.total_capacitance().unwrap() - 85e-15).abs() < 1e-27);
        let bad = "[capacitance]\ntotal_ff = 85\nparasitic_ff = 5\n";
        assert_eq!(key_of(parse_config_str(bad).unwrap_err()), "capacitance.total_ff");
    }

    #[test]
    fn grids() {
        let cfg = parse_config_str("[budget]\nstart_ghz = 3.5\nstop_ghz = 4.5\npoints = 3\n").unwrap();
        let f = cfg.budget_frequencies().unwrap();
        assert_eq!(f.len(), 3);
        assert!((f[1] - 4.0e9).abs() < 1.0);
        let bad = "[budget]\nstart_ghz = 3.5\npoints = 3\n";
        assert_eq!(key_of(parse_config_str(bad).unwrap_err()), "budget");
    }

    #[test]
    fn transmon_frequencies_feed_the_budget() {
        let cfg = parse_config_str("[transmon]\nej_total_ghz = 9.8\nec_ghz = 0.2278\nflux = [0.0, 0.25]\n").unwrap();
        let f = cfg.budget_frequencies().unwrap();
        assert!((f[0] / 1e9 - 3.998_252_53).abs() < 1e-7);
        assert!(f[1] < f[0]);
    }

    #[test]
    fn purcell_from_chi() {
        let text = r#"
[loss]
q_diel = 746e3
[loss.purcell]
resonator_ghz = 6.0
inv_kappa_ns = 300
two_chi_khz = 930
anharmonicity_mhz = -230
reference_f_q_ghz = 4.45
"#;
        let cfg = parse_config_str(text).unwrap();
        let p = cfg.purcell().unwrap().unwrap();
        let delta = p.detuning(4.45e9);
        let chi = crate::physics::dispersive_shift(p.g, delta, TAU * -230e6).unwrap();
        assert!((chi.abs() - TAU * 465e3).abs() / (TAU * 465e3) < 1e-12);
        assert!(cfg.loss_model().unwrap().purcell.is_some());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "[coherence]\ndata_csv = \"data/t1.csv\"\n").unwrap();
        let cfg = parse_config(&path).unwrap();
        let base = fs::canonicalize(dir.path()).unwrap();
        assert_eq!(cfg.coherence_csv().unwrap(), base.join("data/t1.csv"));
        assert!(matches!(
            parse_config(&dir.path().join("missing.toml")).unwrap_err(),
            Error::Input { .. }
        ));
    }
}
