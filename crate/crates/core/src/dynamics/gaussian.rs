use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bogoliubov::{quadrature_map, BogoliubovTransform};
use super::symplectic::symplectic_form;
use crate::error::{Error, Result};

type C64 = Complex64;

/// Gaussian state in quadratures (x_1, p_1, …) with vacuum variance 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    /// Symmetrized second moments ½⟨{Δr_i, Δr_j}⟩.
    pub covariance: DMatrix<f64>,
}

impl GaussianState {
    pub fn vacuum(modes: usize) -> Self {
        GaussianState {
            mean: DVector::zeros(2 * modes),
            covariance: DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        }
    }

    /// Product of thermal states with the given mean occupations.
    pub fn thermal(occupations: &[f64]) -> Result<Self> {
        let mut s = Self::vacuum(occupations.len());
        for (k, &n) in occupations.iter().enumerate() {
            if !(n >= 0.0) || !n.is_finite() {
                return Err(Error::InvalidParams(format!("occupation must be finite and ≥ 0, got {n}")));
            }
            s.covariance[(2 * k, 2 * k)] = n + 0.5;
            s.covariance[(2 * k + 1, 2 * k + 1)] = n + 0.5;
        }
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn evolve(&self, s: &DMatrix<f64>) -> Result<Self> {
        let d = self.mean.len();
        if s.nrows() != d || s.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: s.nrows() });
        }
        Ok(GaussianState { mean: s * &self.mean, covariance: s * &self.covariance * s.transpose() })
    }

    pub fn evolve_bogoliubov(&self, t: &BogoliubovTransform) -> Result<Self> {
        self.evolve(&t.to_symplectic())
    }

    /// Amount by which σ + iΩ/2 fails to be positive semidefinite (0 if valid).
    pub fn uncertainty_violation(&self) -> f64 {
        let o = symplectic_form(self.modes());
        let m = self.covariance.map(|x| C64::new(x, 0.0)) + o.map(|x| C64::new(0.0, 0.5 * x));
        let min = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        (-min).max(0.0)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.mean.len();
        if !d.is_multiple_of(2) || self.covariance.nrows() != d || self.covariance.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.covariance.nrows() });
        }
        if (&self.covariance - self.covariance.transpose()).amax() > tol {
            return Err(Error::InvalidParams("covariance is not symmetric".into()));
        }
        let v = self.uncertainty_violation();
        if v > tol {
            return Err(Error::InvalidParams(format!("covariance violates the uncertainty relation by {v:e}")));
        }
        Ok(())
    }

    /// ⟨ζ⟩ for ζ = (a_1..a_n, a_1†..a_n†).
    pub fn ladder_means(&self) -> DVector<C64> {
        quadrature_map(self.modes()) * self.mean.map(|x| C64::new(x, 0.0))
    }

    /// Raw second moments Γ_αβ = ⟨ζ_α ζ_β⟩.
    pub fn ladder_moments(&self) -> DMatrix<C64> {
        let o = symplectic_form(self.modes());
        let rr = self.covariance.map(|x| C64::new(x, 0.0))
            + (&self.mean * self.mean.transpose()).map(|x| C64::new(x, 0.0))
            + o.map(|x| C64::new(0.0, 0.5 * x));
        let w = quadrature_map(self.modes());
        &w * rr * w.transpose()
    }

    /// ⟨a_k† a_k⟩.
    pub fn occupation(&self, k: usize) -> f64 {
        let (x, p) = (2 * k, 2 * k + 1);
        let c = &self.covariance;
        0.5 * (c[(x, x)] + c[(p, p)] + self.mean[x].powi(2) + self.mean[p].powi(2) - 1.0)
    }

    pub fn reduced_covariance(&self, k: usize) -> Matrix2<f64> {
        self.covariance.fixed_view::<2, 2>(2 * k, 2 * k).into_owned()
    }

    /// Symplectic eigenvalue √det of mode k's reduced covariance.
    pub fn symplectic_eigenvalue(&self, k: usize) -> f64 {
        self.reduced_covariance(k).determinant().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::bogoliubov::evolve_squeeze;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_is_minimal() {
        let v = GaussianState::vacuum(3);
        assert!(v.uncertainty_violation() < 1e-12);
        assert_eq!(v.occupation(1), 0.0);
        assert_relative_eq!(v.symplectic_eigenvalue(2), 0.5);
        v.validate(1e-9).unwrap();
    }

    #[test]
    fn thermal_occupations_round_trip() {
        let s = GaussianState::thermal(&[0.0, 1.5, 3.0]).unwrap();
        assert_relative_eq!(s.occupation(1), 1.5, epsilon = 1e-14);
        assert_relative_eq!(s.occupation(2), 3.0, epsilon = 1e-14);
        let g = s.ladder_moments();
        // ⟨a† a⟩ sits at (n + k, k), ⟨a a†⟩ = n + 1 at (k, n + k)
        assert_relative_eq!(g[(4, 1)].re, 1.5, epsilon = 1e-14);
        assert_relative_eq!(g[(1, 4)].re, 2.5, epsilon = 1e-14);
        assert!(GaussianState::thermal(&[-0.1]).is_err());
    }

    #[test]
    fn squeezed_vacuum_marginals_are_thermal() {
        let xi = 0.7;
        for &t in &[0.1, 0.5, 1.3] {
            let s = GaussianState::vacuum(2).evolve_bogoliubov(&evolve_squeeze(xi, 2.0, 3.0, t)).unwrap();
            assert_relative_eq!(s.symplectic_eigenvalue(0), (2.0 * xi * t).cosh() / 2.0, max_relative = 1e-12);
            assert_relative_eq!(s.symplectic_eigenvalue(1), (2.0 * xi * t).cosh() / 2.0, max_relative = 1e-12);
            assert_relative_eq!(s.occupation(0), (xi * t).sinh().powi(2), max_relative = 1e-12);
            assert!(s.uncertainty_violation() < 1e-9);
        }
    }

    #[test]
    fn detects_unphysical_covariance() {
        let mut s = GaussianState::vacuum(1);
        s.covariance[(0, 0)] = 0.1;
        assert!(s.uncertainty_violation() > 0.1);
        assert!(s.validate(1e-9).is_err());
    }

    #[test]
    fn displaced_moments() {
        let mut s = GaussianState::vacuum(1);
        s.mean[0] = 2.0_f64.sqrt();
        let m = s.ladder_means();
        assert_relative_eq!(m[0].re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.occupation(0), 1.0, epsilon = 1e-14);
    }
}
