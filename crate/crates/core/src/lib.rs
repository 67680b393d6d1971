//! Pore-network percolation and Biot poroelasticity with
//! permeability-porosity closures.
//!
//! * [`network`] builds rectangular, triangular and unstructured pore
//!   networks and solves Poiseuille flow through them.
//! * [`percolation`] runs Monte-Carlo channel closure, bins the outcomes and
//!   estimates percolation thresholds.
//! * [`relations`] holds the porosity-dilatation, Kozeny-Carman and
//!   network-inspired closures.
//! * [`fem`] meshes the rectangle and assembles the Taylor-Hood operators.
//! * [`biot`] time-steps the coupled system.

pub mod biot;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod network;
pub mod percolation;
pub mod relations;

pub use error::{Error, Result};
