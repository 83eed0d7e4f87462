use thiserror::Error;

use crate::circuit::Line;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode index j={j} outside the first Brillouin zone (1 <= |j| <= {half})")]
    Domain { j: i32, half: i32 },

    #[error("invalid circuit parameters: {0}")]
    InvalidParams(String),

    #[error("no sign change of the degeneracy residual over [{lo:e}, {hi:e}] F")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("unsupported resonance: {0}")]
    UnsupportedResonance(String),

    #[error("resonance detuning {detuning:e} rad/s exceeds tolerance {tolerance:e} rad/s")]
    DetuningTooLarge { detuning: f64, tolerance: f64 },

    #[error("integrator step size underflow at t={t:e} s (h={step:e} s)")]
    Stiffness { t: f64, step: f64 },

    #[error("Fock truncation leakage {leakage:e} exceeds {limit:e}")]
    LeakageExceeded { leakage: f64, limit: f64 },

    #[error("coupling is zero; no interaction time scale")]
    NoInteraction,

    #[error("first-order correlation vanishes; g2 cannot be normalized")]
    NotNormalizable,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode {line:?}:{j} does not belong to this Hamiltonian")]
    UnknownMode { line: Line, j: i32 },

    #[error("no Raman resonance between the amplifier modes under the given drive")]
    NoRamanResonance,
}

pub type Result<T> = std::result::Result<T, Error>;
