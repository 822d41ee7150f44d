use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{integrated_signal, QubitState, ReadoutConfig};
use crate::error::{Error, Result};
use crate::fitting::{fit_gaussian_1d, GaussianFit, MIN_GAUSSIAN_SAMPLES};

/// Shots per independently seeded block. Blocks are the unit of work
/// distribution, so output does not depend on how many workers run.
pub const SHOT_BLOCK: usize = 1024;

/// σ-normalized single-shot IQ records for both prepared states.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSet {
    pub i_ground: Vec<f64>,
    pub q_ground: Vec<f64>,
    pub i_excited: Vec<f64>,
    pub q_excited: Vec<f64>,
    /// Fitted Gaussian width per quadrature `[I, Q]` in raw units, used to
    /// normalize the arrays above.
    pub sigma: [f64; 2],
}

impl ShotSet {
    pub fn len(&self) -> usize {
        self.i_ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i_ground.is_empty()
    }

    pub fn ground(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.i_ground.iter().copied().zip(self.q_ground.iter().copied())
    }

    pub fn excited(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.i_excited.iter().copied().zip(self.q_excited.iter().copied())
    }

    /// Builds a set from raw IQ points, normalizing each quadrature by its
    /// pooled within-state width.
    pub fn from_raw(ground: &[(f64, f64)], excited: &[(f64, f64)]) -> Result<Self> {
        if ground.len() != excited.len() {
            return Err(Error::domain("ground and excited records differ in length"));
        }
        let pooled = |pick: fn(&(f64, f64)) -> f64| -> Result<f64> {
            let width = pooled_sigma(
                &ground.iter().map(pick).collect::<Vec<_>>(),
                &excited.iter().map(pick).collect::<Vec<_>>(),
            );
            if width > 0.0 {
                Ok(width)
            } else {
                Err(Error::DegenerateData("a quadrature has zero variance".into()))
            }
        };
        let sigma = [pooled(|p| p.0)?, pooled(|p| p.1)?];
        let norm = |pts: &[(f64, f64)], k: usize| -> Vec<f64> {
            pts.iter()
                .map(|p| if k == 0 { p.0 / sigma[0] } else { p.1 / sigma[1] })
                .collect()
        };
        Ok(Self {
            i_ground: norm(ground, 0),
            q_ground: norm(ground, 1),
            i_excited: norm(excited, 0),
            q_excited: norm(excited, 1),
            sigma,
        })
    }
}

fn pooled_sigma(a: &[f64], b: &[f64]) -> f64 {
    let ss = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>()
    };
    let dof = (a.len() + b.len()).saturating_sub(2);
    if dof == 0 {
        return 0.0;
    }
    ((ss(a) + ss(b)) / dof as f64).sqrt()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed for stream `index` of `seed`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5eed)))
}

fn block_seed(seed: u64, state: QubitState, block: usize) -> u64 {
    let lane = match state {
        QubitState::Ground => 0u64,
        QubitState::Excited => 1u64,
    };
    sub_seed(seed, (block as u64) << 1 | lane)
}

/// Worker count used when none is given: the available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Simulates `n_shots` records per state using all available cores.
pub fn simulate_shots(config: &ReadoutConfig) -> Result<ShotSet> {
    simulate_shots_with_workers(config, default_workers())
}

/// Same output as [`simulate_shots`] for every `workers ≥ 1`.
pub fn simulate_shots_with_workers(config: &ReadoutConfig, workers: usize) -> Result<ShotSet> {
    config.validate()?;
    let sigma = config.noise_sigma();
    let ground = sample_state(config, QubitState::Ground, sigma, workers.max(1));
    let excited = sample_state(config, QubitState::Excited, sigma, workers.max(1));
    ShotSet::from_raw(&ground, &excited)
}

fn sample_state(config: &ReadoutConfig, state: QubitState, sigma: f64, workers: usize) -> Vec<(f64, f64)> {
    let mean = integrated_signal(state, config);
    let n = config.n_shots;
    let blocks: Vec<usize> = (0..n.div_ceil(SHOT_BLOCK)).collect();
    let per_worker = blocks.len().div_ceil(workers).max(1);

    let run_block = |block: usize| -> Vec<(f64, f64)> {
        let count = SHOT_BLOCK.min(n - block * SHOT_BLOCK);
        let mut rng = ChaCha8Rng::seed_from_u64(block_seed(config.seed, state, block));
        (0..count)
            .map(|_| {
                let di: f64 = StandardNormal.sample(&mut rng);
                let dq: f64 = StandardNormal.sample(&mut rng);
                (mean.re + sigma * di, mean.im + sigma * dq)
            })
            .collect()
    };

    if workers == 1 || blocks.len() == 1 {
        return blocks.iter().flat_map(|&b| run_block(b)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = blocks
            .chunks(per_worker)
            .map(|chunk| scope.spawn(move || chunk.iter().flat_map(|&b| run_block(b)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("shot worker panicked"))
            .collect()
    })
}

/// Gaussian analysis of the two clouds along the axis joining their centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFit {
    /// Separation of the projected means over the pooled width.
    pub snr: f64,
    pub centroid_ground: Complex64,
    pub centroid_excited: Complex64,
    pub ground: GaussianFit,
    pub excited: GaussianFit,
    pub sigma_pooled: f64,
    /// Input clouds rescaled so the pooled width is 1.
    pub normalized: ShotSet,
}

pub fn histogram_fit(shots: &ShotSet) -> Result<HistogramFit> {
    let n = shots.len();
    if n < MIN_GAUSSIAN_SAMPLES || shots.i_excited.len() != n {
        return Err(Error::InsufficientData {
            needed: MIN_GAUSSIAN_SAMPLES,
            got: n.min(shots.i_excited.len()),
        });
    }
    let centroid = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        let (si, sq) = pts.fold((0.0, 0.0), |(a, b), (i, q)| (a + i, b + q));
        Complex64::new(si / n as f64, sq / n as f64)
    };
    let cg = centroid(&mut shots.ground());
    let ce = centroid(&mut shots.excited());
    let axis = {
        let d = ce - cg;
        if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let project = |(i, q): (f64, f64)| i * axis.re + q * axis.im;
    let pg: Vec<f64> = shots.ground().map(project).collect();
    let pe: Vec<f64> = shots.excited().map(project).collect();
    let ground = fit_gaussian_1d(&pg).map_err(degenerate)?;
    let excited = fit_gaussian_1d(&pe).map_err(degenerate)?;
    let sigma_pooled = (((ground.n - 1) as f64 * ground.sigma.powi(2) + (excited.n - 1) as f64 * excited.sigma.powi(2))
        / (ground.n + excited.n - 2) as f64)
        .sqrt();
    let snr = (excited.mean - ground.mean).abs() / sigma_pooled;

    let scale = |xs: &[f64]| xs.iter().map(|x| x / sigma_pooled).collect::<Vec<_>>();
    let normalized = ShotSet {
        i_ground: scale(&shots.i_ground),
        q_ground: scale(&shots.q_ground),
        i_excited: scale(&shots.i_excited),
        q_excited: scale(&shots.q_excited),
        sigma: [sigma_pooled * shots.sigma[0], sigma_pooled * shots.sigma[1]],
    };
    Ok(HistogramFit {
        snr,
        centroid_ground: cg,
        centroid_excited: ce,
        ground,
        excited,
        sigma_pooled,
        normalized,
    })
}

fn degenerate(err: Error) -> Error {
    match err {
        Error::DegenerateData(msg) => Error::FitFailure(format!("histogram fit: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::calibrated;
    use super::super::{snr_asymptotic, snr_of_means};
    use super::*;
    use rand_distr::Normal;

    type Cloud = Vec<(f64, f64)>;

    fn clouds(separation: f64, n: usize, seed: u64) -> (Cloud, Cloud) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let mut draw = |cx: f64| -> Cloud {
            (0..n).map(|_| (cx + unit.sample(&mut rng), unit.sample(&mut rng))).collect()
        };
        let g = draw(0.0);
        let e = draw(separation);
        (g, e)
    }

    fn raw_set(g: &[(f64, f64)], e: &[(f64, f64)]) -> ShotSet {
        ShotSet {
            i_ground: g.iter().map(|p| p.0).collect(),
            q_ground: g.iter().map(|p| p.1).collect(),
            i_excited: e.iter().map(|p| p.0).collect(),
            q_excited: e.iter().map(|p| p.1).collect(),
            sigma: [1.0, 1.0],
        }
    }

    #[test]
    fn unit_clouds_separated_by_five() {
        let (g, e) = clouds(5.0, 10_000, 99);
        let fit = histogram_fit(&raw_set(&g, &e)).unwrap();
        assert!((fit.snr - 5.0).abs() < 0.07, "{}", fit.snr);
    }

    #[test]
    fn identical_clouds_give_zero() {
        let (g, _) = clouds(0.0, 1000, 3);
        let fit = histogram_fit(&raw_set(&g, &g)).unwrap();
        assert_eq!(fit.snr, 0.0);
    }

    #[test]
    fn rotation_invariance() {
        let (g, e) = clouds(4.0, 5000, 8);
        let base = histogram_fit(&raw_set(&g, &e)).unwrap().snr;
        for k in 0..8 {
            let theta = k as f64 * std::f64::consts::PI / 4.0 + 0.1;
            let (c, s) = (theta.cos(), theta.sin());
            let rot = |pts: &[(f64, f64)]| -> Vec<(f64, f64)> {
                pts.iter().map(|&(i, q)| (c * i - s * q, s * i + c * q)).collect()
            };
            let snr = histogram_fit(&raw_set(&rot(&g), &rot(&e))).unwrap().snr;
            assert!((snr / base - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn degenerate_clouds_fail() {
        let g = vec![(1.0, 1.0); 200];
        let e = vec![(2.0, 1.0); 200];
        assert!(matches!(histogram_fit(&raw_set(&g, &e)), Err(Error::FitFailure(_))));
        assert!(ShotSet::from_raw(&g, &e).is_err());
    }

    #[test]
    fn too_few_shots_for_histogram() {
        let (g, e) = clouds(3.0, 50, 1);
        assert!(matches!(
            histogram_fit(&raw_set(&g, &e)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn calibrated_config_monte_carlo() {
        let shots = simulate_shots(&calibrated(10_000)).unwrap();
        let fit = histogram_fit(&shots).unwrap();
        assert!((fit.snr - 5.0).abs() < 0.15, "{}", fit.snr);
        // normalized arrays have unit width within the fit uncertainty
        let width = fit.sigma_pooled;
        assert!((width - 1.0).abs() < 3.0 * fit.ground.sigma_err, "{width}");
    }

    #[test]
    fn no_drive_no_signal() {
        let mut cfg = calibrated(10_000);
        cfg.epsilon = 0.0;
        let fit = histogram_fit(&simulate_shots(&cfg).unwrap()).unwrap();
        assert!(fit.snr < 0.05, "{}", fit.snr);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = calibrated(3000);
        let a = simulate_shots(&cfg).unwrap();
        let b = simulate_shots(&cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_shots(&cfg.with_seed(cfg.seed + 1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let cfg = calibrated(5 * SHOT_BLOCK + 17);
        let reference = simulate_shots_with_workers(&cfg, 1).unwrap();
        for workers in [2, 3, 4, 7, 16] {
            assert_eq!(simulate_shots_with_workers(&cfg, workers).unwrap(), reference);
        }
    }

    #[test]
    fn transient_monte_carlo_matches_exact_means() {
        let mut cfg = calibrated(100_000);
        cfg.transient = true;
        for kt in [10.0, 20.0] {
            let c = cfg.with_tau(kt / cfg.kappa);
            let fit = histogram_fit(&simulate_shots(&c).unwrap()).unwrap();
            let exact = snr_of_means(&c).unwrap();
            assert!((fit.snr / exact - 1.0).abs() < 0.01, "{kt}: {} vs {exact}", fit.snr);
        }
    }

    #[test]
    fn transient_converges_to_closed_form() {
        // Within 5% once the window is long against the fill-up lag; see
        // `transient_lag_is_analytic` for the exact deficit.
        let mut cfg = calibrated(100_000);
        cfg.transient = true;
        for kt in [20.0, 40.0, 80.0] {
            let c = cfg.with_tau(kt / cfg.kappa);
            let fit = histogram_fit(&simulate_shots(&c).unwrap()).unwrap();
            let closed = snr_asymptotic(&c).unwrap();
            assert!((fit.snr / closed - 1.0).abs() < 0.05, "{kt}: {} vs {closed}", fit.snr);
        }
    }
}
