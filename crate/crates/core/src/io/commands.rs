//! The eight CLI commands. Each reads its sections of a [`RunConfig`], calls
//! into the physics modules, and writes CSVs, optional SVGs and a report.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::coherence::{budget_table, fit_qdiel, t1_total, t2_bound_check, CoherenceRecord, LossModel};
use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::io::data::{
    read_csv, write_csv, BudgetRowCsv, CoherenceModelRow, CoherenceRow, KappaDistanceRow, LkExtractionRow,
    MeasuredResonatorRow, QuantityRow, RingdownRow, ShotRow, SnrSweepRow, SpiralSweepRow,
};
use crate::io::plot::{Plot, Series};
use crate::io::report::Report;
use crate::readout::{
    default_workers, histogram_fit, separation_fidelity, simulate_shots_with_workers, snr_asymptotic,
    snr_sweep_with_workers, QubitState,
};
use crate::resonator::{
    extract_lk_cpw, fit_kappa_offset, fit_kappa_ringdown, frequency_band, sweep_spiral_lengths, total_inductance,
    ResonatorMode,
};
use crate::units::{FF, GHZ, NH, NS, PH, UM, US};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    DesignResonator,
    SweepSpiral,
    FitLk,
    FitKappa,
    FitQdiel,
    BudgetT1,
    SimulateReadout,
    SnrSweep,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::DesignResonator,
        Command::SweepSpiral,
        Command::FitLk,
        Command::FitKappa,
        Command::FitQdiel,
        Command::BudgetT1,
        Command::SimulateReadout,
        Command::SnrSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::DesignResonator => "design-resonator",
            Command::SweepSpiral => "sweep-spiral",
            Command::FitLk => "fit-lk",
            Command::FitKappa => "fit-kappa",
            Command::FitQdiel => "fit-qdiel",
            Command::BudgetT1 => "budget-t1",
            Command::SimulateReadout => "simulate-readout",
            Command::SnrSweep => "snr-sweep",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
            Error::Validation {
                key: "command".into(),
                constraint: format!("unknown command {s:?}; expected one of {}", names.join(", ")),
            }
        })
    }
}

/// Command-line overrides layered over the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub plots: bool,
    /// Worker threads for Monte-Carlo sampling; output does not depend on it.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    /// File names inside `output_dir`, report last.
    pub artifacts: Vec<String>,
    pub report: String,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    dir: &'a Path,
    plots: bool,
    workers: usize,
    report: Report,
}

impl Ctx<'_> {
    fn csv<R: crate::io::data::CsvRow>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        write_csv(&self.dir.join(name), rows)?;
        self.report.artifact(name);
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: Plot) -> Result<()> {
        if self.plots {
            fs::write(self.dir.join(name), plot.to_svg())?;
            self.report.artifact(name);
        }
        Ok(())
    }
}

/// Resolves defaults, runs `command`, and writes all artifacts plus
/// `report.txt` into the output directory.
pub fn run(command: Command, config: &RunConfig, options: &RunOptions) -> Result<RunSummary> {
    let mut resolved = config.resolve(options.seed, options.output_dir.clone());
    let mut dir = resolved.output_dir();
    if dir.is_relative() {
        dir = std::env::current_dir()?.join(dir);
    }
    resolved.run.output_dir = Some(dir.clone());
    if options.plots {
        resolved.run.emit_plots = Some(true);
    }
    fs::create_dir_all(&dir).map_err(|e| Error::Input {
        path: dir.clone(),
        message: e.to_string(),
    })?;
    log::info!("{command}: writing to {}", dir.display());

    let mut ctx = Ctx {
        cfg: &resolved,
        dir: &dir,
        plots: resolved.emit_plots(),
        workers: options.workers.unwrap_or_else(default_workers).max(1),
        report: Report::new(command, resolved.seed()),
    };
    match command {
        Command::DesignResonator => design_resonator(&mut ctx)?,
        Command::SweepSpiral => sweep_spiral(&mut ctx)?,
        Command::FitLk => fit_lk(&mut ctx)?,
        Command::FitKappa => fit_kappa(&mut ctx)?,
        Command::FitQdiel => fit_qdiel_cmd(&mut ctx)?,
        Command::BudgetT1 => budget_t1(&mut ctx)?,
        Command::SimulateReadout => simulate_readout(&mut ctx)?,
        Command::SnrSweep => snr_sweep_cmd(&mut ctx)?,
    }

    let mut report = ctx.report;
    report.artifact("report.txt");
    let text = report.render(&resolved)?;
    fs::write(dir.join("report.txt"), &text)?;
    Ok(RunSummary {
        output_dir: dir,
        artifacts: report.artifacts().to_vec(),
        report: text,
    })
}

fn design_resonator(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    if let Some(g) = &cfg.geometry {
        if g.turns.is_none() && g.spiral_length_um.is_none() {
            return Err(Error::Validation {
                key: "geometry.turns".into(),
                constraint: "either turns or spiral_length_um is required by design-resonator".into(),
            });
        }
    }
    let geom = cfg.spiral_geometry()?;
    let film = cfg.film_properties()?;
    let c = cfg.total_capacitance()?;
    let n_sq = geom.squares();
    let l_nominal = total_inductance(n_sq, &film)?;
    let band = frequency_band(&geom, &film, c)?;
    for w in &geom.warnings {
        ctx.report.warn(w);
    }

    let mut rows = vec![
        QuantityRow::new("spiral_length", geom.spiral_length / UM, "um"),
        QuantityRow::new("turns", geom.turns as f64, ""),
        QuantityRow::new("squares", n_sq, ""),
        QuantityRow::new("outer_diameter", geom.outer_diameter() / UM, "um"),
        QuantityRow::new("inductance", l_nominal / NH, "nH"),
        QuantityRow::new("capacitance", c / FF, "fF"),
        QuantityRow::new("f_low", band.f_low / GHZ, "GHz"),
        QuantityRow::new("f_nominal", band.f_nominal / GHZ, "GHz"),
        QuantityRow::new("f_high", band.f_high / GHZ, "GHz"),
        QuantityRow::new("band_fraction", band.fractional_width(), ""),
    ];
    ctx.report.result("f_nominal_ghz", band.f_nominal / GHZ);
    ctx.report.result("band_fraction", band.fractional_width());

    if let Some(q_c) = cfg.resonator.as_ref().and_then(|r| r.q_c) {
        let q_i = cfg.resonator.as_ref().and_then(|r| r.q_i);
        let mode = ResonatorMode::new(band.f_nominal, q_c, q_i)?;
        rows.push(QuantityRow::new("kappa", mode.kappa, "1/s"));
        rows.push(QuantityRow::new("inv_kappa", mode.ringdown_time() / NS, "ns"));
        ctx.report.result("inv_kappa_ns", mode.ringdown_time() / NS);
        if let Some(qi) = q_i {
            rows.push(QuantityRow::new("over_coupled", if mode.is_over_coupled() { 1.0 } else { 0.0 }, ""));
            if !mode.is_over_coupled() {
                ctx.report.warn(&format!("Q_i = {qi} is not above 10·Q_c = {}", 10.0 * q_c));
            }
        }
    }
    ctx.csv("design.csv", &rows)
}

fn sweep_spiral(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let template = cfg.spiral_geometry()?;
    let film = cfg.film_properties()?;
    let c = cfg.total_capacitance()?;

    let mut targets: Vec<(f64, Option<f64>)> = cfg
        .sweep_lengths()?
        .unwrap_or_default()
        .into_iter()
        .map(|l| (l, None))
        .collect();
    if let Some(path) = cfg.sweep.as_ref().and_then(|s| s.measured_csv.as_ref()) {
        let measured: Vec<MeasuredResonatorRow> = read_csv(path)?;
        for m in &measured {
            if !(m.spiral_length_um > 0.0 && m.f_measured_ghz > 0.0) {
                return Err(Error::Input {
                    path: path.clone(),
                    message: "spiral lengths and frequencies must be positive".into(),
                });
            }
        }
        targets.extend(measured.iter().map(|m| (m.spiral_length_um * UM, Some(m.f_measured_ghz * GHZ))));
    }
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));
    if targets.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }

    let lengths: Vec<f64> = targets.iter().map(|t| t.0).collect();
    let points = sweep_spiral_lengths(&template, &film, c, &lengths)?;
    let rows: Vec<SpiralSweepRow> = points
        .iter()
        .zip(&targets)
        .map(|(p, t)| SpiralSweepRow {
            spiral_length_um: p.spiral_length / UM,
            turns: p.turns,
            f_low_ghz: p.band.f_low / GHZ,
            f_nominal_ghz: p.band.f_nominal / GHZ,
            f_high_ghz: p.band.f_high / GHZ,
            f_measured_ghz: t.1.map(|f| f / GHZ),
        })
        .collect();

    let matched: Vec<(&SpiralSweepRow, f64)> = rows.iter().filter_map(|r| r.f_measured_ghz.map(|f| (r, f))).collect();
    if !matched.is_empty() {
        let n = matched.len() as f64;
        let mean_abs = matched.iter().map(|(r, f)| (r.f_nominal_ghz - f).abs()).sum::<f64>() / n;
        let mean_rel = matched.iter().map(|(r, f)| (r.f_nominal_ghz - f).abs() / r.f_nominal_ghz).sum::<f64>() / n;
        let inside = matched.iter().filter(|(r, f)| (r.f_low_ghz..=r.f_high_ghz).contains(f)).count();
        ctx.report.result("mean_abs_deviation_mhz", mean_abs * 1e3);
        ctx.report.result("mean_rel_deviation", mean_rel);
        ctx.report.result("measured_inside_band", inside as f64);
        ctx.report.result("measured_points", n);
    }
    ctx.report.result("sweep_points", rows.len() as f64);
    ctx.csv("spiral_sweep.csv", &rows)?;

    if ctx.plots {
        let x: Vec<f64> = rows.iter().map(|r| r.spiral_length_um).collect();
        let plot = Plot::new("Resonator frequency vs spiral length", "spiral length (µm)", "frequency (GHz)")
            .with(Series::band(
                "L_k band",
                "#7fa7d9",
                x.clone(),
                rows.iter().map(|r| r.f_low_ghz).collect(),
                rows.iter().map(|r| r.f_high_ghz).collect(),
            ))
            .with(Series::line("nominal", "#1f4e9a", rows.iter().map(|r| (r.spiral_length_um, r.f_nominal_ghz)).collect()))
            .with(Series::scatter("measured", "#c0392b", matched.iter().map(|(r, f)| (r.spiral_length_um, *f)).collect()));
        ctx.svg("spiral_sweep.svg", plot)?;
    }
    Ok(())
}

fn fit_lk(ctx: &mut Ctx) -> Result<()> {
    let (structure, geometric, width, freqs) = ctx.cfg.cpw_structure()?;
    let rows = freqs
        .iter()
        .map(|&f| {
            Ok(LkExtractionRow {
                f_measured_ghz: f / GHZ,
                lk_ph_per_sq: extract_lk_cpw(f, &structure, geometric, width)? / PH,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.lk_ph_per_sq).sum::<f64>() / n;
    ctx.report.result("lk_mean_ph_per_sq", mean);
    if rows.len() > 1 {
        let var = rows.iter().map(|r| (r.lk_ph_per_sq - mean).powi(2)).sum::<f64>() / (n - 1.0);
        ctx.report.result("lk_std_ph_per_sq", var.sqrt());
    }
    ctx.csv("lk_extraction.csv", &rows)
}

fn fit_kappa(ctx: &mut Ctx) -> Result<()> {
    let section = ctx.cfg.kappa_section()?.clone();
    let mut rows = Vec::new();
    if let Some(path) = &section.ringdown_csv {
        let trace: Vec<(f64, f64)> = read_csv::<RingdownRow>(path)?.iter().map(|r| (r.t_s, r.v_amplitude)).collect();
        let fit = fit_kappa_ringdown(&trace)?;
        let inv = fit.lifetime();
        rows.push(QuantityRow::new("kappa", fit.kappa, "1/s").with_error(fit.kappa_err));
        rows.push(QuantityRow::new("inv_kappa", inv / NS, "ns").with_error(fit.kappa_err * inv * inv / NS));
        rows.push(QuantityRow::new("ringdown_amplitude", fit.amplitude, "V"));
        rows.push(QuantityRow::new("ringdown_offset", fit.offset, "V"));
        ctx.report.result("kappa_per_s", fit.kappa);
        ctx.report.result("inv_kappa_ns", inv / NS);
        if !fit.fit.converged {
            ctx.report.warn("ring-down fit stopped at the iteration cap");
        }
    }
    if let Some(path) = &section.offset_csv {
        let points: Vec<(f64, f64)> = read_csv::<KappaDistanceRow>(path)?
            .iter()
            .map(|r| (r.d_um * UM, r.kappa_per_s))
            .collect();
        let fit = fit_kappa_offset(&points)?;
        ctx.report.warn("κ(d) = κ₀·exp(−d/d₀) is phenomenological; check it against data before extrapolating");
        let err = &fit.fit.std_errors;
        rows.push(QuantityRow::new("kappa0", fit.kappa0, "1/s").with_error(err[0]));
        rows.push(QuantityRow::new("d0", fit.d0 / UM, "um").with_error(err[1] / UM));
        ctx.report.result("kappa0_per_s", fit.kappa0);
        ctx.report.result("d0_um", fit.d0 / UM);
    }
    ctx.csv("kappa_fit.csv", &rows)
}

fn load_coherence(path: &Path) -> Result<Vec<CoherenceRecord>> {
    let rows: Vec<CoherenceRow> = read_csv(path)?;
    rows.iter()
        .map(|r| {
            let mut rec = CoherenceRecord::new(r.f_q_ghz * GHZ, r.t1_us * US)?;
            if let Some(s) = r.t1_spread_us {
                rec = rec.with_spread(s * US)?;
            }
            if let Some(t) = r.t2e_us {
                rec = rec.with_t2e(t * US)?;
            }
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Domain(m) | Error::Validation { constraint: m, .. } => Error::Input {
                path: path.to_path_buf(),
                message: m,
            },
            other => other,
        })
}

fn dense(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn fit_qdiel_cmd(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let records = load_coherence(cfg.coherence_csv()?)?;
    let purcell = cfg.purcell()?;
    let fit = fit_qdiel(&records, purcell)?;
    if !fit.weighted && records.iter().any(|r| r.t1_spread.is_some()) {
        ctx.report.warn("some records lack t1_spread_us; fitted with uniform weights");
    }
    let mut model = LossModel::dielectric(fit.q_diel)?;
    if let Some(p) = purcell {
        model = model.with_purcell(p);
    }

    let params = vec![
        QuantityRow::new("q_diel", fit.q_diel, "").with_error(fit.q_diel_err),
        QuantityRow::new("weighted", if fit.weighted { 1.0 } else { 0.0 }, ""),
        QuantityRow::new("records", records.len() as f64, ""),
        QuantityRow::new("residual_norm", fit.fit.residual_norm, ""),
    ];
    ctx.report.result("q_diel", fit.q_diel);
    ctx.report.result("q_diel_std_error", fit.q_diel_err);

    let mut rows = Vec::with_capacity(records.len());
    let mut failures = 0;
    for rec in &records {
        let check = rec.t2e.map(|_| t2_bound_check(rec)).transpose()?;
        if check.is_some_and(|c| !c.pass) {
            failures += 1;
            ctx.report.warn(&format!(
                "T2E at {:.4} GHz exceeds 2·T1 by more than the 5% tolerance",
                rec.f_q / GHZ
            ));
        }
        rows.push(CoherenceModelRow {
            f_q_ghz: rec.f_q / GHZ,
            t1_us: rec.t1 / US,
            t1_model_us: t1_total(rec.f_q, &model)? / US,
            t2e_us: rec.t2e.map(|t| t / US),
            t2_ratio: check.map(|c| c.ratio),
            t2_pass: check.map(|c| c.pass),
        });
    }
    ctx.report.result("t2_bound_failures", failures as f64);
    ctx.csv("qdiel_fit.csv", &params)?;
    ctx.csv("coherence_model.csv", &rows)?;

    if ctx.plots {
        let lo = rows.iter().map(|r| r.f_q_ghz).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.f_q_ghz).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo * 0.95, hi * 1.05) };
        let curve = dense(lo, hi, 100)
            .into_iter()
            .map(|f| Ok((f, t1_total(f * GHZ, &model)? / US)))
            .collect::<Result<Vec<_>>>()?;
        let plot = Plot::new("T1 vs qubit frequency", "f_q (GHz)", "T1 (µs)")
            .with(Series::scatter("measured", "#c0392b", rows.iter().map(|r| (r.f_q_ghz, r.t1_us)).collect()))
            .with(Series::line(&format!("fit Q = {:.0}", fit.q_diel), "#1f4e9a", curve));
        ctx.svg("t1_vs_fq.svg", plot)?;
    }
    Ok(())
}

fn budget_t1(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let freqs = cfg.budget_frequencies()?;
    let model = cfg.loss_model()?;
    let table = budget_table(&freqs, &model)?;
    let rows: Vec<BudgetRowCsv> = table
        .iter()
        .map(|b| BudgetRowCsv {
            f_q_ghz: b.f_q / GHZ,
            t1_diel_us: b.t1_dielectric / US,
            t1_purcell_us: b.t1_purcell / US,
            t1_total_us: b.t1_total / US,
            t2_limit_us: b.t2_limit / US,
        })
        .collect();
    let worst = rows.iter().map(|r| r.t1_total_us).fold(f64::INFINITY, f64::min);
    ctx.report.result("t1_total_min_us", worst);
    ctx.csv("t1_budget.csv", &rows)?;

    if ctx.plots {
        let pick = |f: fn(&BudgetRowCsv) -> f64| rows.iter().map(|r| (r.f_q_ghz, f(r))).collect::<Vec<_>>();
        let mut plot = Plot::new("T1 budget vs qubit frequency", "f_q (GHz)", "T1 (µs)")
            .with(Series::line("dielectric", "#7f8c8d", pick(|r| r.t1_diel_us)))
            .with(Series::line("total", "#1f4e9a", pick(|r| r.t1_total_us)));
        if rows.iter().any(|r| r.t1_purcell_us.is_finite()) {
            plot = plot.with(Series::line("Purcell", "#e67e22", pick(|r| r.t1_purcell_us)));
        }
        ctx.svg("t1_vs_fq.svg", plot)?;
    }
    Ok(())
}

fn simulate_readout(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg.readout_config()?;
    if !cfg.tau_m.is_finite() {
        return Err(Error::Validation {
            key: "readout.tau_ns".into(),
            constraint: "is required by simulate-readout".into(),
        });
    }
    let shots = simulate_shots_with_workers(&cfg, ctx.workers)?;
    let hist = histogram_fit(&shots)?;
    let snr_cf = snr_asymptotic(&cfg)?;

    let mut rows = Vec::with_capacity(2 * shots.len());
    rows.extend(shots.ground().map(|(i, q)| ShotRow { state: QubitState::Ground, i, q }));
    rows.extend(shots.excited().map(|(i, q)| ShotRow { state: QubitState::Excited, i, q }));

    let summary = vec![
        QuantityRow::new("epsilon", cfg.epsilon, "1/s"),
        QuantityRow::new("kappa", cfg.kappa, "1/s"),
        QuantityRow::new("chi", cfg.chi, "rad/s"),
        QuantityRow::new("tau_m", cfg.tau_m / NS, "ns"),
        QuantityRow::new("phi", cfg.phase()?, "rad"),
        QuantityRow::new("shots_per_state", cfg.n_shots as f64, ""),
        QuantityRow::new("snr_closed_form", snr_cf, ""),
        QuantityRow::new("snr_hist", hist.snr, ""),
        QuantityRow::new("fidelity_closed_form", separation_fidelity(snr_cf)?, ""),
        QuantityRow::new("fidelity_hist", separation_fidelity(hist.snr)?, ""),
    ];
    ctx.report.result("snr_closed_form", snr_cf);
    ctx.report.result("snr_hist", hist.snr);
    ctx.report.result("epsilon_per_s", cfg.epsilon);
    ctx.csv("shots.csv", &rows)?;
    ctx.csv("readout_summary.csv", &summary)
}

fn snr_sweep_cmd(ctx: &mut Ctx) -> Result<()> {
    let taus = ctx.cfg.tau_list()?;
    let cfg = ctx.cfg.readout_config()?.with_tau(taus[0]);
    let sweep = snr_sweep_with_workers(&cfg, &taus, ctx.workers)?;
    let rows: Vec<SnrSweepRow> = sweep
        .iter()
        .map(|r| SnrSweepRow {
            tau_ns: r.tau_m / NS,
            snr_eq1: r.snr_closed_form,
            snr_mc: r.snr_mc,
            fidelity: r.fidelity,
        })
        .collect();
    ctx.report.result("epsilon_per_s", cfg.epsilon);
    if let Some(r) = rows.iter().find(|r| r.fidelity > 0.999) {
        ctx.report.result("first_tau_above_99.9pct_ns", r.tau_ns);
    }
    ctx.csv("snr_sweep.csv", &rows)?;

    if ctx.plots {
        let plot = Plot::new("Readout SNR vs measurement time", "τ_m (ns)", "SNR")
            .with(Series::line("closed form", "#1f4e9a", rows.iter().map(|r| (r.tau_ns, r.snr_eq1)).collect()))
            .with(Series::scatter("Monte-Carlo", "#e67e22", rows.iter().map(|r| (r.tau_ns, r.snr_mc)).collect()));
        ctx.svg("snr_vs_tau.svg", plot)?;
    }
    Ok(())
}
