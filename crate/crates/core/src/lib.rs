// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod error;
pub mod fitting;
pub mod io;
pub mod physics;
pub mod readout;
pub mod resonator;
pub mod units;

pub use error::{Error, Result};
