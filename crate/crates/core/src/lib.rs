//! Periodic ray orbits among planar obstacles, Taylor series of the
//! limiting scattering phases, and a boundary-element cross-check.

pub mod bem;
pub mod config;
pub mod curves;
pub mod dist_series;
pub mod error;
pub mod linalg;
pub mod orbit;
pub mod phase_solver;
pub mod quadrature;
pub mod report;
pub mod specfun;
pub mod twodisk;

pub use error::{Error, Result};
