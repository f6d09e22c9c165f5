//! Statevector-level simulation of quantum-kernel inference strategies,
//! with exact query and gate accounting and a seeded benchmark harness.

pub mod cli;
pub mod coefkit;
pub mod costmodel;
pub mod dataset;
pub mod estimate;
pub mod error;
pub mod featuremap;
pub mod harness;
pub mod oracles;
pub mod statevec;
pub mod strategies;

pub use error::{Error, Result};
