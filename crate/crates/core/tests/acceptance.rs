//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Tolerances and runtime budgets are pinned below.

// The erfc oracle table keeps every digit it was generated with.
#![allow(clippy::excessive_precision)]

use std::f64::consts::TAU;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use qreadout::coherence::{
    fit_qdiel, t1_dielectric, t1_purcell, t1_total, t2_bound_check, t2_limit, CoherenceRecord, LossModel,
    PurcellCoupling,
};
use qreadout::fitting::erfc;
use qreadout::io::{parse_config_str, run, Command, RunOptions};
use qreadout::readout::{
    calibrate_epsilon, histogram_fit, separation_fidelity, simulate_shots_with_workers, snr_asymptotic, snr_of_means,
    ReadoutConfig,
};
use qreadout::resonator::{
    cpw_quarter_wave_frequency, extract_lk_cpw, fit_kappa_ringdown, frequency_band, CpwTestStructure,
    FilmProperties, SpiralGeometry, Termination,
};

// Measured values the calibrated scenario is built from.
const INV_KAPPA: f64 = 300e-9;
const TWO_CHI_HZ: f64 = 930e3;
const CAL_TAU: f64 = 700e-9;
const CAL_SNR: f64 = 5.0;
const SHOTS: usize = 10_000;
const Q_DIEL_REF: f64 = 746e3;
const Q_DIEL_ERR_REF: f64 = 41e3;

const SNR_REL_TOL: f64 = 1e-6;
const FIDELITY_TARGET: f64 = 0.99959;
const FIDELITY_TOL: f64 = 1e-5;
const ERFC_TOL: f64 = 1e-7;
const MC_REL_TOL: f64 = 0.03;
const RINGDOWN_REL_TOL: f64 = 0.02;
const RINGDOWN_NOISE: f64 = 0.01;
const QDIEL_NOISELESS_TOL: f64 = 1e-4;
const BAND_TOL: f64 = 1e-4;
const LK_REL_TOL: f64 = 1e-6;

/// erfc(k/10), k = 0..=60, from a 50-digit arbitrary-precision evaluation.
const ERFC_ORACLE: [f64; 61] = [
    1.0,
    8.8753708398171511e-1,
    7.7729741078952155e-1,
    6.7137324054087257e-1,
    5.7160764495333154e-1,
    4.7950012218695346e-1,
    3.9614390915207408e-1,
    3.2219880616258153e-1,
    2.5789903529233951e-1,
    2.0309178757716787e-1,
    1.5729920705028513e-1,
    1.197949304259183e-1,
    8.968602177036462e-2,
    6.5992055059347563e-2,
    4.7714880237351189e-2,
    3.3894853524689273e-2,
    2.3651616655355992e-2,
    1.6209541409225436e-2,
    1.0909498364269286e-2,
    7.2095707647425301e-3,
    4.6777349810472658e-3,
    2.9794666563329855e-3,
    1.8628462979818914e-3,
    1.1431765973566515e-3,
    6.8851389664507857e-4,
    4.0695201744495894e-4,
    2.360344165293492e-4,
    1.3433273994052433e-4,
    7.5013194665459024e-5,
    4.1097878099458836e-5,
    2.2090496998585441e-5,
    1.1648657367199596e-5,
    6.025761151762095e-6,
    3.0577097964381615e-6,
    1.5219933628622854e-6,
    7.4309837234141275e-7,
    3.558629930076853e-7,
    1.671510579091462e-7,
    7.7003927456964129e-8,
    3.4792248597231742e-8,
    1.5417257900280019e-8,
    6.7000276540848984e-9,
    2.8554941795921886e-9,
    1.1934717937220413e-9,
    4.8917102706058884e-10,
    1.9661604415428875e-10,
    7.7495995974418319e-11,
    2.9952597863796603e-11,
    1.1352143584921961e-11,
    4.2189365240057814e-12,
    1.5374597944280349e-12,
    5.4938202175552996e-13,
    1.924906109997236e-13,
    6.6130818503407983e-14,
    2.2276786794677948e-14,
    7.3578479179743981e-15,
    2.3828362845830184e-15,
    7.5662116218625014e-16,
    2.3555893751564366e-16,
    7.1904097835505083e-17,
    2.1519736712498913e-17,
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn calibrated(tau_m: f64, seed: u64) -> ReadoutConfig {
    let kappa = 1.0 / INV_KAPPA;
    let chi = TAU * TWO_CHI_HZ / 2.0;
    ReadoutConfig {
        epsilon: calibrate_epsilon(kappa, chi, CAL_TAU, CAL_SNR).unwrap(),
        kappa,
        chi,
        tau_m,
        n_shots: SHOTS,
        seed,
        transient: false,
    }
}

fn closed_form_points() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (tau, want) in [(175e-9, 2.5), (2800e-9, 10.0)] {
        let got = snr_asymptotic(&calibrated(tau, 0)).unwrap();
        worst = worst.max((got / want - 1.0).abs());
        detail.push(format!("SNR({:.0} ns) = {got:.9}", tau * 1e9));
    }
    outcome(worst < SNR_REL_TOL, format!("{}; worst rel err {worst:.1e}", detail.join(", ")))
}

fn fidelity_and_erfc() -> Outcome {
    let f = separation_fidelity(5.0).unwrap();
    let worst = ERFC_ORACLE
        .iter()
        .enumerate()
        .map(|(k, want)| (erfc(k as f64 / 10.0) - want).abs())
        .fold(0.0, f64::max);
    outcome(
        (f - FIDELITY_TARGET).abs() <= FIDELITY_TOL && worst <= ERFC_TOL,
        format!("F_s(5) = {f:.8}; max |erfc - oracle| = {worst:.1e} over 61 points"),
    )
}

fn monte_carlo_consistency() -> Outcome {
    let kappa = 1.0 / INV_KAPPA;
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (k, kt) in [10.0, 20.0, 40.0].into_iter().enumerate() {
        let cfg = calibrated(kt / kappa, 2024 + k as u64);
        let cf = snr_asymptotic(&cfg).unwrap();
        let shots = simulate_shots_with_workers(&cfg, 4).unwrap();
        let mc = histogram_fit(&shots).unwrap().snr;
        worst = worst.max((mc / cf - 1.0).abs());
        detail.push(format!("κτ={kt}: {mc:.4}/{cf:.4}"));
    }
    // Not part of the pass condition: with the integrated-cavity means the
    // boxcar window still lags the closed form at κτ = 10.
    let mut transient = calibrated(10.0 / kappa, 0);
    transient.transient = true;
    let lag = 1.0 - snr_of_means(&transient).unwrap() / snr_asymptotic(&transient).unwrap();
    outcome(
        worst <= MC_REL_TOL,
        format!(
            "{} (10^4 shots/state, asymptotic means); worst rel dev {:.2}% [integrated-cavity means at κτ=10 sit {:.1}% below]",
            detail.join(", "),
            100.0 * worst,
            100.0 * lag
        ),
    )
}

fn ringdown() -> Outcome {
    let kappa = 3.3333e6;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, RINGDOWN_NOISE).unwrap();
        // 5 amplitude decay constants (2/κ each), 200 samples, unit amplitude.
        let trace: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let t = k as f64 * 10.0 / kappa / 199.0;
                (t, (-kappa * t / 2.0).exp() + noise.sample(&mut rng))
            })
            .collect();
        let fit = fit_kappa_ringdown(&trace).unwrap();
        worst = worst.max((fit.lifetime() * kappa - 1.0).abs());
    }
    outcome(
        worst <= RINGDOWN_REL_TOL,
        format!("1/κ target {:.1} ns, worst rel dev over 20 seeds {:.3}%", 1e9 / kappa, 100.0 * worst),
    )
}

fn synthetic_records(q: f64, sigma_ln: f64, rng: Option<&mut ChaCha8Rng>) -> Vec<CoherenceRecord> {
    let freqs: Vec<f64> = (0..10).map(|k| 3.5e9 + 1.3e9 * k as f64 / 9.0).collect();
    let mut rng = rng;
    freqs
        .iter()
        .map(|&f| {
            let mut t1 = t1_dielectric(f, q).unwrap();
            if let Some(r) = rng.as_deref_mut() {
                let z: f64 = Normal::new(0.0, sigma_ln).unwrap().sample(r);
                t1 *= z.exp();
            }
            CoherenceRecord::new(f, t1).unwrap()
        })
        .collect()
}

fn qdiel_fits() -> Outcome {
    let clean = fit_qdiel(&synthetic_records(1e6, 0.0, None), None).unwrap();
    let clean_err = (clean.q_diel / 1e6 - 1.0).abs();

    // Per-record log-normal width chosen so that the expected standard error
    // over 10 records matches the published ±41×10³.
    let sigma_ln = Q_DIEL_ERR_REF / Q_DIEL_REF * 10f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(746);
    let fit = fit_qdiel(&synthetic_records(Q_DIEL_REF, sigma_ln, Some(&mut rng)), None).unwrap();
    let within = (fit.q_diel / Q_DIEL_REF).ln().abs() <= sigma_ln;
    let same_order = (0.5..=2.0).contains(&(fit.q_diel_err / Q_DIEL_ERR_REF));

    // The reported errors should describe the scatter of repeated fits.
    let trials: Vec<(f64, f64)> = (0..100)
        .map(|_| {
            let f = fit_qdiel(&synthetic_records(Q_DIEL_REF, sigma_ln, Some(&mut rng)), None).unwrap();
            (f.q_diel, f.q_diel_err)
        })
        .collect();
    let n = trials.len() as f64;
    let mean_q = trials.iter().map(|t| t.0).sum::<f64>() / n;
    let scatter = (trials.iter().map(|t| (t.0 - mean_q).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mean_err = trials.iter().map(|t| t.1).sum::<f64>() / n;
    let calibrated_err = (0.7..=1.4).contains(&(scatter / mean_err));

    outcome(
        clean_err < QDIEL_NOISELESS_TOL && within && same_order && calibrated_err,
        format!(
            "noiseless rel err {clean_err:.1e}; noisy Q = {:.0} ± {:.0} (injected σ_ln {sigma_ln:.3}); \
             100 trials: scatter {scatter:.0}, mean SE {mean_err:.0}",
            fit.q_diel, fit.q_diel_err
        ),
    )
}

fn band_property() -> Outcome {
    let geom = SpiralGeometry::builder()
        .disk_radius(30e-6)
        .line_width(1e-6)
        .gap(2e-6)
        .feed_offset(20e-6)
        .turns(6)
        .build()
        .unwrap();
    let film = FilmProperties::from_ph(2.0, 2.0, 2.2).unwrap();
    let band = frequency_band(&geom, &film, 85e-15).unwrap();
    let want = 1.0 - (2.0f64 / 2.2).sqrt();
    let got = band.fractional_width();
    outcome(
        (got - want).abs() < BAND_TOL,
        format!("fractional band {:.5}% vs {:.5}%", 100.0 * got, 100.0 * want),
    )
}

fn lk_round_trip() -> Outcome {
    let s = CpwTestStructure::new(4000e-6, 420e-9, 160e-12, Termination::QuarterWave).unwrap();
    let width = 10e-6;
    let mut worst: f64 = 0.0;
    for lk_ph in [0.5, 1.0, 2.0, 4.0] {
        let lk = lk_ph * 1e-12;
        let f = cpw_quarter_wave_frequency(&s, lk, 0.0, width).unwrap();
        let back = extract_lk_cpw(f, &s, 0.0, width).unwrap();
        worst = worst.max((back / lk - 1.0).abs());
    }
    outcome(worst < LK_REL_TOL, format!("L_k ∈ {{0.5, 1, 2, 4}} pH/□, worst rel err {worst:.1e}"))
}

fn coherence_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bound_ok = true;
    let mut t2_ok = true;
    for _ in 0..1000 {
        let f_q = rng.random_range(3.0e9..6.0e9);
        let q = 10f64.powf(rng.random_range(4.0..7.0));
        let g = TAU * rng.random_range(0.0..200e6);
        let f_r = rng.random_range(6.5e9..8.0e9);
        let kappa = 10f64.powf(rng.random_range(5.0..8.0));
        let purcell = PurcellCoupling::new(g, TAU * f_r, kappa).unwrap();
        let model = LossModel::dielectric(q).unwrap().with_purcell(purcell);
        let total = t1_total(f_q, &model).unwrap();
        let diel = t1_dielectric(f_q, q).unwrap();
        let purc = t1_purcell(g, purcell.detuning(f_q), kappa).unwrap();
        bound_ok &= total <= diel.min(purc);
        t2_ok &= t2_limit(total, 0.0).unwrap() == 2.0 * total;
    }
    let rec = CoherenceRecord::new(4.45e9, 25e-6).unwrap().with_t2e(47e-6).unwrap();
    let check = t2_bound_check(&rec).unwrap();
    outcome(
        bound_ok && t2_ok && check.pass,
        format!(
            "harmonic bound {}, T2 = 2·T1 {} on 10^3 points; T1 25 µs / T2E 47 µs ratio {:.2} {}",
            if bound_ok { "holds" } else { "violated" },
            if t2_ok { "exact" } else { "inexact" },
            check.ratio,
            if check.pass { "pass" } else { "fail" }
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let toml = "[run]\nseed = 2024\n\n[readout]\ninv_kappa_ns = 300\ntwo_chi_khz = 930\ntarget_snr = 5.0\ntau_ns = 700\nn_shots = 10000\n";
    let config = dir.path().join("readout.toml");
    fs::write(&config, toml).unwrap();

    let cli = |out: &str| {
        let run = std::process::Command::new(env!("CARGO_BIN_EXE_qreadout"))
            .args(["simulate-readout", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        fs::read(dir.path().join(out).join("shots.csv")).unwrap()
    };
    let a = cli("a");
    let b = cli("b");

    let cfg = parse_config_str(toml).unwrap();
    let partitions: Vec<Vec<u8>> = [1, 3, 8]
        .iter()
        .map(|&w| {
            let out = dir.path().join(format!("w{w}"));
            let opts = RunOptions {
                output_dir: Some(out.clone()),
                workers: Some(w),
                ..Default::default()
            };
            run(Command::SimulateReadout, &cfg, &opts).unwrap();
            fs::read(out.join("shots.csv")).unwrap()
        })
        .collect();
    let same_runs = a == b;
    let same_partitions = partitions.iter().all(|p| *p == a);
    outcome(
        same_runs && same_partitions,
        format!(
            "two CLI runs {}; workers 1/3/8 {} ({} bytes)",
            if same_runs { "byte-identical" } else { "differ" },
            if same_partitions { "byte-identical" } else { "differ" },
            a.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("closed-form SNR points", closed_form_points, Duration::from_secs(1)),
        ("fidelity threshold and erfc kernel", fidelity_and_erfc, Duration::from_secs(1)),
        ("Monte-Carlo vs closed-form SNR", monte_carlo_consistency, Duration::from_secs(10)),
        ("ring-down extraction", ringdown, Duration::from_secs(5)),
        ("Q_diel fits", qdiel_fits, Duration::from_secs(10)),
        ("resonator band property", band_property, Duration::from_secs(1)),
        ("L_k extraction round trip", lk_round_trip, Duration::from_secs(1)),
        ("coherence invariants", coherence_invariants, Duration::from_secs(5)),
        ("determinism", determinism, Duration::from_secs(10)),
    ];
    let mut failures = 0;
    for (k, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= *budget;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {} [{}] {name}: {} ({:.2} s of {} s)",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
