//! Rear-end collision warning: episode data, safety features, cost-sensitive
//! classifiers, classical warning algorithms, evaluation and TOPSIS model
//! selection.

pub mod baselines;
pub mod classifiers;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod rng;
pub mod topsis;
pub mod trajdata;

pub use error::{Error, Result};
