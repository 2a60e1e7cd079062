//! Planar N-vortex dynamics with positive vorticities.
//!
//! The crate covers the Hamiltonian flow and its first integrals, symplectic
//! and adaptive time integration, normalised relative equilibria and their
//! energy levels, the reduction to action-angle coordinates on the quotient
//! space, shooting for relative periodic orbits, and cyclically symmetric
//! multi-ring systems.

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod flow;
pub mod integrators;
mod linalg;
pub mod orbits;
pub mod reduction;
pub mod symmetry;

pub use dynamics::{Configuration, IntegralValues, VorticitySet};
pub use error::{Result, VortexError};
pub use integrators::{DriftReport, IntegratorConfig, Scheme, Trajectory};
