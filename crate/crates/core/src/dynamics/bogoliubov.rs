use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Heisenberg-picture solution `a(t) = A a + B a†` for n modes.
///
/// `a_coeffs` and `b_coeffs` are lab-frame coefficients. `frame_phases`
/// records the free rotation already folded into them; see
/// [`BogoliubovTransform::interaction_frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovTransform {
    pub a_coeffs: DMatrix<C64>,
    pub b_coeffs: DMatrix<C64>,
    pub frame_phases: DVector<C64>,
}

/// Unitary W with ζ = W q, ζ = (a_1..a_n, a_1†..a_n†), q = (x_1, p_1, …).
pub fn quadrature_map(n: usize) -> DMatrix<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(k, 2 * k)] = C64::new(r, 0.0);
        w[(k, 2 * k + 1)] = C64::new(0.0, r);
        w[(n + k, 2 * k)] = C64::new(r, 0.0);
        w[(n + k, 2 * k + 1)] = C64::new(0.0, -r);
    }
    w
}

impl BogoliubovTransform {
    pub fn identity(n: usize) -> Self {
        BogoliubovTransform {
            a_coeffs: DMatrix::identity(n, n),
            b_coeffs: DMatrix::zeros(n, n),
            frame_phases: DVector::from_element(n, C64::new(1.0, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.a_coeffs.nrows()
    }

    /// Largest violation of A A† − B B† = I and A Bᵀ = B Aᵀ.
    pub fn canonical_defect(&self) -> f64 {
        let (a, b) = (&self.a_coeffs, &self.b_coeffs);
        let n = self.dim();
        let c1 = a * a.adjoint() - b * b.adjoint() - DMatrix::<C64>::identity(n, n);
        let c2 = a * b.transpose() - b * a.transpose();
        c1.iter().chain(c2.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// M with ζ(t) = M ζ: [[A, B], [B*, A*]].
    pub fn block_matrix(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a_coeffs);
        m.view_mut((0, n), (n, n)).copy_from(&self.b_coeffs);
        m.view_mut((n, 0), (n, n)).copy_from(&self.b_coeffs.map(|z| z.conj()));
        m.view_mut((n, n), (n, n)).copy_from(&self.a_coeffs.map(|z| z.conj()));
        m
    }

    /// Real symplectic matrix acting on (x_1, p_1, …).
    pub fn to_symplectic(&self) -> DMatrix<f64> {
        let w = quadrature_map(self.dim());
        (w.adjoint() * self.block_matrix() * w).map(|z| z.re)
    }

    pub fn from_symplectic(s: &DMatrix<f64>) -> Result<Self> {
        if s.nrows() != s.ncols() || !s.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: s.nrows(), found: s.ncols() });
        }
        let n = s.nrows() / 2;
        let w = quadrature_map(n);
        let m = &w * s.map(|x| C64::new(x, 0.0)) * w.adjoint();
        Ok(BogoliubovTransform {
            a_coeffs: m.view((0, 0), (n, n)).into_owned(),
            b_coeffs: m.view((0, n), (n, n)).into_owned(),
            frame_phases: DVector::from_element(n, C64::new(1.0, 0.0)),
        })
    }

    /// The evolution `self` applied after `earlier` (Heisenberg composition).
    pub fn after(&self, earlier: &Self) -> Result<Self> {
        if self.dim() != earlier.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: earlier.dim() });
        }
        let (a2, b2) = (&self.a_coeffs, &self.b_coeffs);
        let (a1, b1) = (&earlier.a_coeffs, &earlier.b_coeffs);
        Ok(BogoliubovTransform {
            a_coeffs: a2 * a1 + b2 * b1.map(|z| z.conj()),
            b_coeffs: a2 * b1 + b2 * a1.map(|z| z.conj()),
            frame_phases: self.frame_phases.component_mul(&earlier.frame_phases),
        })
    }

    /// Coefficients with the frame rotation removed from each output mode.
    pub fn interaction_frame(&self) -> Self {
        let mut out = self.clone();
        for (i, phase) in self.frame_phases.iter().enumerate() {
            let undo = phase.conj();
            for j in 0..self.dim() {
                out.a_coeffs[(i, j)] = self.a_coeffs[(i, j)] * undo;
                out.b_coeffs[(i, j)] = self.b_coeffs[(i, j)] * undo;
            }
        }
        out.frame_phases.fill(C64::new(1.0, 0.0));
        out
    }

    /// max |M − M'| over the block matrices.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.block_matrix() - other.block_matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn two_mode(
    a: [[C64; 2]; 2],
    b: [[C64; 2]; 2],
    phases: [C64; 2],
) -> BogoliubovTransform {
    let mut t = BogoliubovTransform::identity(2);
    for i in 0..2 {
        for j in 0..2 {
            t.a_coeffs[(i, j)] = phases[i] * a[i][j];
            t.b_coeffs[(i, j)] = phases[i] * b[i][j];
        }
    }
    t.frame_phases = DVector::from_row_slice(&phases);
    t
}

/// Degenerate beam splitter under H = ħω(a†a + b†b) + ħξ(a†b + ab†).
pub fn evolve_hopping(xi: f64, omega: f64, t: f64) -> BogoliubovTransform {
    evolve_raman(xi, omega, omega, t)
}

/// Frequency-converting beam splitter; in the frame rotating at (ω, υ) the
/// Hamiltonian is ħξ(a†b + ab†).
pub fn evolve_raman(xi: f64, omega_l: f64, upsilon_r: f64, t: f64) -> BogoliubovTransform {
    let (s, c) = (xi * t).sin_cos();
    let c = C64::new(c, 0.0);
    let mis = C64::new(0.0, -s);
    let zero = C64::new(0.0, 0.0);
    two_mode(
        [[c, mis], [mis, c]],
        [[zero; 2]; 2],
        [C64::from_polar(1.0, -omega_l * t), C64::from_polar(1.0, -upsilon_r * t)],
    )
}

/// Two-mode squeezer; in the frame rotating at (ω, υ) the Hamiltonian is
/// ħξ(ab + a†b†).
pub fn evolve_squeeze(xi: f64, omega_l: f64, upsilon_r: f64, t: f64) -> BogoliubovTransform {
    let x = xi * t;
    let ch = C64::new(x.cosh(), 0.0);
    let mish = C64::new(0.0, -x.sinh());
    let zero = C64::new(0.0, 0.0);
    two_mode(
        [[ch, zero], [zero, ch]],
        [[zero, mish], [mish, zero]],
        [C64::from_polar(1.0, -omega_l * t), C64::from_polar(1.0, -upsilon_r * t)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_time_is_identity() {
        let id = BogoliubovTransform::identity(2);
        assert!(evolve_hopping(3.0, 10.0, 0.0).distance(&id) < 1e-15);
        assert!(evolve_squeeze(3.0, 10.0, 7.0, 0.0).distance(&id) < 1e-15);
    }

    #[test]
    fn quarter_period_swaps_modes() {
        let t = evolve_hopping(1.0, 0.0, FRAC_PI_2);
        assert!(t.a_coeffs[(0, 0)].norm() < 1e-15);
        assert_relative_eq!(t.a_coeffs[(0, 1)].im, -1.0);
        assert_relative_eq!(t.a_coeffs[(1, 0)].im, -1.0);
    }

    #[test]
    fn raman_reduces_to_hopping() {
        let a = evolve_raman(0.3, 5.0, 5.0, 1.7);
        let b = evolve_hopping(0.3, 5.0, 1.7);
        assert_eq!(a, b);
        let free = evolve_raman(0.0, 5.0, 2.0, 1.7);
        assert!(free.b_coeffs.iter().all(|z| z.norm() == 0.0));
        assert_eq!(free.a_coeffs[(0, 1)].norm(), 0.0);
        assert!((free.a_coeffs[(1, 1)] - C64::from_polar(1.0, -2.0 * 1.7)).norm() < 1e-14);
    }

    #[test]
    fn closed_forms_are_canonical() {
        for &(xi, t) in &[(0.1, 3.0), (2.0, 2.5), (-1.3, 0.7)] {
            assert!(evolve_hopping(xi, 4.0, t).canonical_defect() < 1e-12);
            assert!(evolve_raman(xi, 4.0, 9.0, t).canonical_defect() < 1e-12);
            assert!(evolve_squeeze(xi, 4.0, 9.0, t).canonical_defect() < 1e-10);
        }
    }

    #[test]
    fn symplectic_round_trip() {
        let t = evolve_squeeze(0.4, 1.0, 2.0, 1.1);
        let s = t.to_symplectic();
        let back = BogoliubovTransform::from_symplectic(&s).unwrap();
        assert!(back.distance(&t) < 1e-13);
    }

    #[test]
    fn composition_adds_times() {
        // static generators only: the lab-frame squeezer is driven
        let a = evolve_squeeze(0.4, 0.0, 0.0, 0.3);
        let b = evolve_squeeze(0.4, 0.0, 0.0, 0.5);
        assert!(b.after(&a).unwrap().distance(&evolve_squeeze(0.4, 0.0, 0.0, 0.8)) < 1e-13);
        let a = evolve_hopping(0.4, 2.0, 0.3);
        let b = evolve_hopping(0.4, 2.0, 0.5);
        assert!(b.after(&a).unwrap().distance(&evolve_hopping(0.4, 2.0, 0.8)) < 1e-13);
    }

    #[test]
    fn interaction_frame_strips_phases() {
        let t = evolve_raman(0.5, 3.0, 8.0, 0.9).interaction_frame();
        let bare = evolve_raman(0.5, 0.0, 0.0, 0.9);
        assert!(t.distance(&bare) < 1e-14);
    }
}
