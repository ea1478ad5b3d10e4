//! Sparse planar sensor arrays built from coprime ideals of imaginary
//! quadratic rings, with coarray verification, spatial smoothing, DOA
//! simulation and MIMO beam-pattern metrics.

pub mod cli;
pub mod coarray;
pub mod config;
pub mod designs;
pub mod error;
pub mod lattice;
pub mod output;
pub mod rings;
pub mod sensing;
pub mod smith;
pub mod smoothing;
pub mod verify;

pub use error::{Error, Result};
pub use rings::{Point, QuadInt, RingSpec};
