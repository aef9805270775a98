//! Pseudospectral solvers and diagnostics for the Whitham equation, its
//! capillary variant, the KdV limits and the 1D Boussinesq-Whitham system.

pub mod analysis;
pub mod error;
pub mod evolve;
pub mod io;
pub mod krylov;
pub mod models;
pub mod spectral;
pub mod travel;

pub use error::{Error, Result};
