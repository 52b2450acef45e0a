//! Discrete-time feedback control of quantum systems under generalized measurements.
//!
//! The crate decides controllability properties of a measurement, synthesizes
//! feedback sequences that transfer states, and simulates the resulting
//! averaged and single-trajectory dynamics.

pub mod canonical;
pub mod cli;
pub mod controllability;
pub mod demo;
pub mod error;
pub mod matops;
pub mod quantum;
pub mod simulate;
pub mod synthesis;

pub use error::{Error, Result};
pub use matops::{ComplexMatrix, ComplexVector, ToleranceConfig};
pub use quantum::{DensityMatrix, Measurement, PureState};
