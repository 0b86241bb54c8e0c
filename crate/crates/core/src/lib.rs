//! Discrete averaging for quasi-integrable symplectic maps.
//!
//! Interpolating vector fields built from finite differences of orbits,
//! their flows and Hamiltonians, resonance covering and the pendulum model
//! near a resonant torus.

pub mod error;
pub mod interpolation;
pub mod map_kernel;
pub mod numerics;
pub mod hamiltonian;
pub mod resonance;
pub mod nucleus;
pub mod experiments;

pub use error::{Error, Result};
pub use map_kernel::{catalog, DomainSpec, MapForm, MapModel, PhaseMap, PhasePoint};
