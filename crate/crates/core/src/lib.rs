//! Moments of output probabilities of noisy random circuits.
//!
//! The crate has four layers: single-qubit channel algebra ([`channel`]),
//! exact simulation and gate-averaged propagation ([`circuit`]), closed-form
//! moment formulas and {I, S} label recursions ([`moments`], [`statmech`]), and
//! a Monte Carlo harness with verification suites ([`harness`]).

pub mod channel;
pub mod circuit;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod moments;
pub mod statmech;
pub mod stats;

pub use error::{Error, Result};
