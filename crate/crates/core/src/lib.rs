//! Charge-basis model of the four-junction rhombus qubit.

pub mod circuit;
pub mod config;
pub mod error;
pub mod fit;
pub mod hilbert;
pub mod noise;
pub mod observables;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
