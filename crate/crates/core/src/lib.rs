//! Disentanglement of a Bell pair of molecular charge qubits whose local
//! environments are shells of randomly placed, randomly oriented double
//! quantum dots.
//!
//! The pair evolves under a diagonal electrostatic Hamiltonian, so only the
//! |00⟩⟨11| coherence of the reduced density matrix changes. Three models of
//! that coherence are provided and checked against one another: an explicit
//! state vector with a partial trace, an exact closed form over the
//! double-bit-flip energies, and a Gaussian approximation whose width sets
//! the disentanglement time scale `τ_E = πħ/E^flip_rms`.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod electrostatics;
pub mod error;
pub mod geometry;
pub mod measures;
pub mod output;
pub mod reduce;
pub mod rng;
pub mod spectra;
pub mod timescales;

pub use constants::{default_constants, PhysicalConstants};
pub use dynamics::{AnalyticModel, CoherenceSeries, Model, ReducedDensity};
pub use electrostatics::{flip_coefficients, FlipCoefficients};
pub use error::{Error, Result};
pub use geometry::{build_scene, Scene, SceneConfig, Separation};
pub use timescales::{timescales, TimescaleReport};
