//! Nonparametric Bayesian decompounding of integer-valued compound Poisson
//! processes observed at discrete, possibly irregular, times.

pub mod augmentation;
pub mod datasets;
pub mod diagnostics;
pub mod diophantine;
pub mod error;
pub mod gibbs;
pub mod io;
pub mod model;
pub mod plugin;
pub mod rng;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
