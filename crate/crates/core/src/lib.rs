//! Simulation and exact-density toolkit for the arithmetic of Pólya urn walks.
//!
//! The crate simulates Pólya's walk and its relatives, measures how often the
//! walk sits on lattice points visible from the origin, and checks those
//! proportions against exact number-theoretic densities and closed-form
//! expectations.

pub mod densities;
pub mod error;
pub mod estimates;
pub mod harness;
pub mod mixture;
pub mod numtheory;
pub mod rng;
pub mod stats;
pub mod walks;

pub use error::{Error, Result};
