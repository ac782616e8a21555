//! Spectral classification of stirring protocols.
//!
//! Builds empirical transfer-operator matrices from trajectory data, estimates
//! the subdominant eigenvalue, calibrates critical values by Monte Carlo over
//! random unistochastic matrices, and classifies the protocol as weak-mixing,
//! ergodic but not weak-mixing, or nonergodic.

pub mod analytic;
pub mod critical_values;
pub mod error;
pub mod matrices;
pub mod protocols;
pub mod rng_dist;
pub mod spectra;
pub mod ulam;

pub use error::{Error, Result};
