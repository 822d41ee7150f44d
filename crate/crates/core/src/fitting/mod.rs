//! Numerical kernels shared by the analysis operations.

mod erfc;
mod gaussian;
mod lm;
pub mod models;

pub use self::erfc::{erf, erfc};
pub use self::gaussian::{fit_gaussian_1d, GaussianFit, MIN_GAUSSIAN_SAMPLES};
pub use self::lm::{
    least_squares, numeric_gradient, DataPoint, FitResult, FnModel, LeastSquares, Model,
};
