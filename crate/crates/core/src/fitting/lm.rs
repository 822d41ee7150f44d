//! Weighted nonlinear least squares by damped Gauss–Newton iteration.
//!
//! Minimizes `Σ wᵢ (yᵢ − f(xᵢ; θ))²`. Parameters are rescaled internally by
//! the magnitude of the initial guess so that rates in s⁻¹ and offsets of
//! order one can share a fit. The damping term is `λ·I` in the scaled
//! coordinates, started at `1e-3 · max diag(JᵀWJ)`, multiplied by 10 on a
//! rejected step and divided by 10 on an accepted one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A scalar model `y = f(x; θ)`.
pub trait Model {
    fn n_params(&self) -> usize;

    fn eval(&self, x: f64, params: &[f64]) -> f64;

    /// Analytic ∂f/∂θ at `x`. Returning `None` selects central differences.
    fn gradient(&self, _x: f64, _params: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Wraps a closure as a [`Model`] with finite-difference derivatives.
pub struct FnModel<F> {
    n_params: usize,
    f: F,
}

impl<F: Fn(f64, &[f64]) -> f64> FnModel<F> {
    pub fn new(n_params: usize, f: F) -> Self {
        Self { n_params, f }
    }
}

impl<F: Fn(f64, &[f64]) -> f64> Model for FnModel<F> {
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn eval(&self, x: f64, params: &[f64]) -> f64 {
        (self.f)(x, params)
    }
}

/// Central-difference gradient with step √ε·(1 + |θᵢ|).
pub fn numeric_gradient<M: Model + ?Sized>(model: &M, x: f64, params: &[f64]) -> Vec<f64> {
    let mut work = params.to_vec();
    (0..params.len())
        .map(|i| {
            let h = f64::EPSILON.sqrt() * (1.0 + params[i].abs());
            work[i] = params[i] + h;
            let up = model.eval(x, &work);
            work[i] = params[i] - h;
            let down = model.eval(x, &work);
            work[i] = params[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

impl DataPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, weight: 1.0 }
    }

    pub fn weighted(x: f64, y: f64, weight: f64) -> Self {
        Self { x, y, weight }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Standard errors with the residual variance scaled by n/(n−p).
    /// Infinite when n = p.
    pub std_errors: Vec<f64>,
    /// √(Σ wᵢ rᵢ²) at the returned parameters.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value after the initial evaluation and each accepted step.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn param(&self, i: usize) -> f64 {
        self.params[i]
    }

    pub fn std_error(&self, i: usize) -> f64 {
        self.std_errors[i]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LeastSquares {
    pub max_iterations: usize,
    /// Stop when an accepted step reduces the cost by less than this fraction.
    pub cost_tolerance: f64,
    /// Stop when every Jacobian column is this close to orthogonal to the residual.
    pub gradient_tolerance: f64,
}

impl Default for LeastSquares {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tolerance: 1e-10,
            gradient_tolerance: 1e-8,
        }
    }
}

/// Fits `model` to `data` from `init` with default settings.
pub fn least_squares<M: Model + ?Sized>(
    model: &M,
    data: &[DataPoint],
    init: &[f64],
) -> Result<FitResult> {
    LeastSquares::default().fit(model, data, init)
}

struct Linearization {
    residuals: DVector<f64>,
    // √w-scaled Jacobian of the model in scaled parameter coordinates
    jacobian: DMatrix<f64>,
    cost: f64,
}

impl LeastSquares {
    pub fn fit<M: Model + ?Sized>(
        &self,
        model: &M,
        data: &[DataPoint],
        init: &[f64],
    ) -> Result<FitResult> {
        let p = model.n_params();
        if init.len() != p {
            return Err(Error::domain(format!(
                "initial guess has {} entries, model has {p} parameters",
                init.len()
            )));
        }
        if init.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("initial guess must be finite"));
        }
        if data
            .iter()
            .any(|d| !d.x.is_finite() || !d.y.is_finite() || !(d.weight >= 0.0) || !d.weight.is_finite())
        {
            return Err(Error::domain("data must be finite with non-negative weights"));
        }
        let n_effective = data.iter().filter(|d| d.weight > 0.0).count();
        if n_effective < p {
            return Err(Error::InsufficientData {
                needed: p,
                got: n_effective,
            });
        }

        let scale: Vec<f64> = init
            .iter()
            .map(|v| if v.abs() > 0.0 { v.abs() } else { 1.0 })
            .collect();
        let to_params = |u: &DVector<f64>| -> Vec<f64> {
            u.iter().zip(&scale).map(|(ui, si)| ui * si).collect()
        };

        let mut u = DVector::from_iterator(p, init.iter().zip(&scale).map(|(v, s)| v / s));
        let mut lin = self.linearize(model, data, &to_params(&u), &scale)?;
        let mut history = vec![lin.cost];

        let normal = |lin: &Linearization| lin.jacobian.transpose() * &lin.jacobian;
        let mut a = normal(&lin);
        let mut g = lin.jacobian.transpose() * &lin.residuals;
        let max_diag = a.diagonal().iter().cloned().fold(0.0, f64::max);
        if !(max_diag > 0.0) {
            return Err(Error::FitFailure("model does not depend on its parameters".into()));
        }
        let mut lambda = 1e-3 * max_diag;

        let mut converged = false;
        let mut iterations = 0;
        while iterations < self.max_iterations {
            if lin.cost == 0.0 || self.gradient_measure(&lin, &g) < self.gradient_tolerance {
                converged = true;
                break;
            }
            iterations += 1;

            let mut damped = a.clone();
            for i in 0..p {
                damped[(i, i)] += lambda;
            }
            let step = match damped.cholesky() {
                Some(chol) => chol.solve(&g),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial = &u + &step;
            let trial_params = to_params(&trial);
            let accepted = match self.linearize(model, data, &trial_params, &scale) {
                Ok(next) if next.cost.is_finite() && next.cost <= lin.cost => Some(next),
                _ => None,
            };
            match accepted {
                Some(next) => {
                    let reduction = (lin.cost - next.cost) / lin.cost;
                    u = trial;
                    lin = next;
                    a = normal(&lin);
                    g = lin.jacobian.transpose() * &lin.residuals;
                    history.push(lin.cost);
                    lambda = (lambda / 10.0).max(f64::MIN_POSITIVE);
                    if reduction < self.cost_tolerance {
                        converged = true;
                        break;
                    }
                }
                None => {
                    // A step too small to move any parameter means no further
                    // descent is representable.
                    if step.norm() <= 1e-15 * (u.norm() + 1e-15) {
                        converged = true;
                        break;
                    }
                    lambda *= 10.0;
                }
            }
        }

        let params = to_params(&u);
        let std_errors = self.std_errors(&lin, &scale, n_effective, p)?;
        Ok(FitResult {
            params,
            std_errors,
            residual_norm: lin.cost.sqrt(),
            converged,
            iterations,
            cost_history: history,
        })
    }

    fn linearize<M: Model + ?Sized>(
        &self,
        model: &M,
        data: &[DataPoint],
        params: &[f64],
        scale: &[f64],
    ) -> Result<Linearization> {
        let p = params.len();
        let n = data.len();
        let mut residuals = DVector::zeros(n);
        let mut jacobian = DMatrix::zeros(n, p);
        let mut cost = 0.0;
        for (row, d) in data.iter().enumerate() {
            let sw = d.weight.sqrt();
            let r = sw * (d.y - model.eval(d.x, params));
            let grad = model
                .gradient(d.x, params)
                .unwrap_or_else(|| numeric_gradient(model, d.x, params));
            residuals[row] = r;
            cost += r * r;
            for (col, gc) in grad.iter().enumerate() {
                jacobian[(row, col)] = sw * gc * scale[col];
            }
        }
        if !cost.is_finite() || jacobian.iter().any(|v| !v.is_finite()) {
            return Err(Error::FitFailure("model produced non-finite values".into()));
        }
        Ok(Linearization {
            residuals,
            jacobian,
            cost,
        })
    }

    // Largest cosine between the residual vector and any Jacobian column.
    fn gradient_measure(&self, lin: &Linearization, g: &DVector<f64>) -> f64 {
        let r_norm = lin.residuals.norm();
        if r_norm == 0.0 {
            return 0.0;
        }
        (0..g.len())
            .map(|j| {
                let col = lin.jacobian.column(j).norm();
                if col == 0.0 {
                    0.0
                } else {
                    g[j].abs() / (col * r_norm)
                }
            })
            .fold(0.0, f64::max)
    }

    fn std_errors(
        &self,
        lin: &Linearization,
        scale: &[f64],
        n: usize,
        p: usize,
    ) -> Result<Vec<f64>> {
        let svd = lin.jacobian.clone().svd(false, false);
        let max_sv = svd.singular_values.max();
        let min_sv = svd.singular_values.min();
        if !(min_sv > 1e-10 * max_sv) {
            return Err(Error::FitFailure("normal matrix is rank deficient".into()));
        }
        let a = lin.jacobian.transpose() * &lin.jacobian;
        let inverse = a
            .try_inverse()
            .ok_or_else(|| Error::FitFailure("normal matrix is singular".into()))?;
        if n <= p {
            return Ok(vec![f64::INFINITY; p]);
        }
        let variance = lin.cost / (n - p) as f64;
        Ok((0..p)
            .map(|i| scale[i] * (variance * inverse[(i, i)].max(0.0)).sqrt())
            .collect())
    }
}
