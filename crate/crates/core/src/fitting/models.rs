//! Built-in models with analytic Jacobians.

use super::lm::Model;

/// `y = slope·x + intercept`, params `[slope, intercept]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Line;

impl Model for Line {
    fn n_params(&self) -> usize {
        2
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x + p[1]
    }

    fn gradient(&self, x: f64, _p: &[f64]) -> Option<Vec<f64>> {
        Some(vec![x, 1.0])
    }
}

/// Amplitude ring-down `V(t) = v0·exp(−κt/2) + offset`, params `[v0, κ, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpDecayOffset;

impl Model for ExpDecayOffset {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, t: f64, p: &[f64]) -> f64 {
        p[0] * (-p[1] * t / 2.0).exp() + p[2]
    }

    fn gradient(&self, t: f64, p: &[f64]) -> Option<Vec<f64>> {
        let e = (-p[1] * t / 2.0).exp();
        Some(vec![e, -p[0] * t / 2.0 * e, 1.0])
    }
}

/// `y = amplitude·exp(−x/length)`, params `[amplitude, length]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpFalloff;

impl Model for ExpFalloff {
    fn n_params(&self) -> usize {
        2
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (-x / p[1]).exp()
    }

    fn gradient(&self, x: f64, p: &[f64]) -> Option<Vec<f64>> {
        let e = (-x / p[1]).exp();
        Some(vec![e, p[0] * x / (p[1] * p[1]) * e])
    }
}

/// `y = curvature·(x − center)² + floor`, params `[curvature, center, floor]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parabola;

impl Model for Parabola {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (x - p[1]).powi(2) + p[2]
    }

    fn gradient(&self, x: f64, p: &[f64]) -> Option<Vec<f64>> {
        let dx = x - p[1];
        Some(vec![dx * dx, -2.0 * p[0] * dx, 1.0])
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fitting::lm::numeric_gradient;

    /// Checks an analytic gradient against central differences.
    pub(crate) fn assert_gradient_matches<M: Model>(model: &M, xs: &[f64], params: &[f64]) {
        for &x in xs {
            let analytic = model.gradient(x, params).expect("analytic gradient");
            let numeric = numeric_gradient(model, x, params);
            for (a, n) in analytic.iter().zip(&numeric) {
                let scale = a.abs().max(n.abs()).max(1e-300);
                assert!(
                    (a - n).abs() <= 1e-6 * scale || (a - n).abs() < 1e-12,
                    "x = {x}: analytic {a} vs numeric {n}"
                );
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let xs = [0.0, 0.3, 1.1, 2.7];
        assert_gradient_matches(&Line, &xs, &[2.0, -1.0]);
        assert_gradient_matches(&ExpDecayOffset, &xs, &[1.5, 0.8, 0.1]);
        assert_gradient_matches(&ExpFalloff, &xs, &[4.0, 1.3]);
        assert_gradient_matches(&Parabola, &xs, &[0.7, 1.2, -0.4]);
    }
}
