//! Time evolution three ways: closed-form Bogoliubov solutions, a symplectic
//! propagator for arbitrary (time-dependent) quadratic Hamiltonians, and a
//! truncated Fock-space oracle.
//!
//! All routines work with canonical ladder operators. Quadratures are
//! x = (a + a†)/√2, p = −i(a − a†)/√2, ordered (x_1, p_1, x_2, p_2, …).

mod bogoliubov;
mod fock;
mod gaussian;
mod symplectic;

pub use bogoliubov::{evolve_hopping, evolve_raman, evolve_squeeze, quadrature_map, BogoliubovTransform};
pub use fock::{
    fock_evolve, fock_propagate, hom_output_state, FockPropagator, FockState, DEFAULT_HOPPING_CUTOFF,
    DEFAULT_SQUEEZE_CUTOFF, LEAKAGE_LIMIT,
};
pub use gaussian::GaussianState;
pub use symplectic::{
    generator, propagate_counted, propagate_static, symplectic_defect, symplectic_form,
    symplectic_propagate,
};
