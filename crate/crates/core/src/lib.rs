//! Simulator for a left-handed and a right-handed superconducting
//! transmission line joined by a driven SQUID.
//!
//! The pipeline runs from circuit parameters to mode dispersion, phase
//! matching and resonance classification, then to quadratic Hamiltonians,
//! their Bogoliubov/symplectic dynamics, two-time correlation functions and
//! the two-bath amplifier. All quantities are SI; frequencies are angular.
//!
//! Sweeps fan out through [`Exec`]; with the `parallel` feature disabled
//! every path runs sequentially and gives identical results.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod hamiltonian;
pub mod matching;
pub mod thermo;

pub use circuit::{CircuitParams, DriveSpec, FrequencyChoice, JosephsonConvention, Line, ModeIndex, Tone};
pub use error::{Error, Result};
pub use exec::Exec;
pub use hamiltonian::QuadraticHamiltonian;
pub use matching::{ResonanceKind, ResonanceSpec, ResonanceTolerance};
