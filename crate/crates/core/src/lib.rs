//! Slope-constrained TV2 linear splines: nodal and ReLU representations,
//! slope projection, spline potentials and proximal maps, a fitting solver,
//! and small-scale reconstruction with learned spline nonlinearities.

pub mod cli;
pub mod error;
pub mod fit;
pub mod io;
pub mod potential;
pub mod pwl;
pub mod recon;
pub mod slope;

pub use error::{Error, Result};
