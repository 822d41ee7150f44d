use crate::error::{Error, Result};

pub const MIN_GAUSSIAN_SAMPLES: usize = 100;

/// Maximum-likelihood Gaussian parameters with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub mean: f64,
    pub sigma: f64,
    pub mean_err: f64,
    pub sigma_err: f64,
    pub n: usize,
}

/// Fits a 1D Gaussian to raw samples without histogramming.
///
/// Uses the sample mean and the bias-corrected standard deviation; the
/// quoted uncertainties are σ/√n and σ/√(2n). Sums run in index order.
pub fn fit_gaussian_1d(samples: &[f64]) -> Result<GaussianFit> {
    let n = samples.len();
    if n < MIN_GAUSSIAN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_GAUSSIAN_SAMPLES,
            got: n,
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite sample".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|v| (v - mean).powi(2)).sum();
    let sigma = (ss / (n - 1) as f64).sqrt();
    if !(sigma > f64::EPSILON * mean.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateData("samples have zero variance".into()));
    }
    let nf = n as f64;
    Ok(GaussianFit {
        mean,
        sigma,
        mean_err: sigma / nf.sqrt(),
        sigma_err: sigma / (2.0 * nf).sqrt(),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_samples(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn standard_normal_fixed_seed() {
        let fit = fit_gaussian_1d(&normal_samples(7, 10_000)).unwrap();
        assert!(fit.mean.abs() < 0.02, "{fit:?}");
        assert!((fit.sigma - 1.0).abs() < 0.015, "{fit:?}");
        assert!((fit.mean_err - 0.01).abs() < 2e-4);
    }

    #[test]
    fn constant_samples_are_degenerate() {
        let err = fit_gaussian_1d(&[3.5; 200]).unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)));
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_gaussian_1d(&[0.0, 1.0]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn affine_equivariance() {
        let xs = normal_samples(11, 500);
        let base = fit_gaussian_1d(&xs).unwrap();
        for (a, b) in [(2.5, -1.0), (-0.5, 3.0)] {
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let fit = fit_gaussian_1d(&ys).unwrap();
            assert!((fit.mean - (a * base.mean + b)).abs() < 1e-12);
            assert!((fit.sigma - a.abs() * base.sigma).abs() < 1e-12);
        }
    }
}
