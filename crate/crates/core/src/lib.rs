//! Simulation and analysis of a dissipative tight-binding chain with
//! non-reciprocal incoherent hopping: Lindblad generator, biorthogonal
//! spectral analysis, direct and two-step relaxation protocols, and the
//! exactly solvable classical birth-death limit.

pub mod classical;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod numerics;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{ChainParams, DensityMatrix, Superoperator};
