//! Concentration of empirical multi-product tensors: sampling, deviation
//! norms, closed-form bounds, chaining diagnostics and Monte Carlo
//! experiments.

pub mod bounds;
pub mod chaining;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
