//! Numerical toolkit for boundary control of a coupled pair of KdV equations.

pub mod banded;
pub mod critical;
pub mod diagonalization;
pub mod error;
pub mod grid;
pub mod harness;
pub mod hum;
pub mod linear;
pub mod mms;
pub mod nonlinear;
pub mod norms;
pub mod params;
pub mod state;
pub mod stencil;
pub mod time_sobolev;

pub use error::{Error, Result};
pub use grid::Grid;
pub use params::{validate_params, SystemParams, ValidatedParams};
pub use state::{BoundaryData, Channel, End, SourcePair, StatePair, TraceSet, Trajectory};
