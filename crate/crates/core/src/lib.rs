//! Numerical laboratory for thrifty (multi-shot) classical shadow estimation.
//!
//! Module map:
//! - [`pauli`], [`clifford`], [`dense`]: Pauli/Clifford machinery and dense kernels.
//! - [`states`]: named states, characteristic functions, stabilizer 2-Rényi entropy.
//! - [`variance`]: closed-form variances for the Haar, Clifford, interleaved and
//!   single-T-layer ensembles.
//! - [`commutant`]: fourth cross-moment operator and the Clifford commutant at small n.
//! - [`sim`]: Monte Carlo thrifty shadow experiments.
//! - [`verify`]: named invariant suites.
//! - [`report`]: request documents, command handlers and output writers.

pub mod clifford;
pub mod commutant;
pub mod dense;
pub mod error;
pub mod pauli;
pub mod report;
pub mod sim;
pub mod states;
pub mod variance;
pub mod verify;

pub use error::{Error, Result};
