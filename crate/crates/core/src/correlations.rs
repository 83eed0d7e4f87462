//! First- and second-order correlations of the resonant (left, right) pair.
//!
//! `G² = prefactor · ⟨a†(t1) b†(t2) a(t1) b(t2)⟩` with prefactor
//! ħ²/(N² C_r C_l ω υ), and `G¹ = ħ/(N C ω) · ⟨c†(t) c(t)⟩` per mode, so that
//! `G² = g² · G¹_L · G¹_R`. Closed forms are evaluated in product form, which
//! is finite for every occupation and time.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitParams, FrequencyChoice, Line, ModeIndex, HBAR};
use crate::dynamics::{
    evolve_raman, evolve_squeeze, BogoliubovTransform, FockPropagator, FockState, GaussianState,
    LEAKAGE_LIMIT,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hamiltonian::QuadraticHamiltonian;
use crate::matching::ResonanceKind;

type C64 = Complex64;

/// G¹ values at or below this (in units of quanta) are treated as zero by
/// the numerical routes.
pub const NORMALIZATION_FLOOR: f64 = 1e-14;

/// Dimensionful factors converting mode expectation values to G¹ and G².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationScale {
    pub prefactor: f64,
    pub g1_left: f64,
    pub g1_right: f64,
}

impl CorrelationScale {
    /// Dimensionless expectation values.
    pub fn unit() -> Self {
        CorrelationScale { prefactor: 1.0, g1_left: 1.0, g1_right: 1.0 }
    }

    pub fn for_pair(
        params: &CircuitParams,
        pair: (ModeIndex, ModeIndex),
        choice: FrequencyChoice,
    ) -> Result<Self> {
        params.validate()?;
        let (l, r) = pair;
        if l.line != Line::Left || r.line != Line::Right {
            return Err(Error::InvalidParams(format!("pair must be (left, right), got ({l}, {r})")));
        }
        let n = params.n();
        let g1_left = HBAR / (n * params.c_left * params.frequency(l, choice)?);
        let g1_right = HBAR / (n * params.c_right * params.frequency(r, choice)?);
        Ok(CorrelationScale { prefactor: g1_left * g1_right, g1_left, g1_right })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub g2_unnormalized: f64,
    /// `None` where a first-order correlation vanishes.
    pub g2_normalized: Option<f64>,
    pub prefactor: f64,
    pub g1_left: f64,
    pub g1_right: f64,
}

impl CorrelationResult {
    fn from_moments(g2: f64, n_left: f64, n_right: f64, scale: &CorrelationScale, floor: f64) -> Self {
        let g2_normalized =
            if n_left > floor && n_right > floor { Some(g2 / (n_left * n_right)) } else { None };
        CorrelationResult {
            g2_unnormalized: scale.prefactor * g2,
            g2_normalized,
            prefactor: scale.prefactor,
            g1_left: scale.g1_left * n_left,
            g1_right: scale.g1_right * n_right,
        }
    }

    pub fn normalized(&self) -> Result<f64> {
        self.g2_normalized.ok_or(Error::NotNormalizable)
    }
}

fn check_times(t1: f64, t2: f64) -> Result<()> {
    if !(t1 >= 0.0 && t2 >= 0.0) {
        return Err(Error::InvalidParams(format!("times must be ≥ 0, got ({t1}, {t2})")));
    }
    Ok(())
}

/// Fock input |s_L, s_R⟩ under hopping or Raman coupling ξ.
pub fn g2_hopping_raman_fock(
    s_l: u32,
    s_r: u32,
    xi: f64,
    t1: f64,
    t2: f64,
    scale: &CorrelationScale,
) -> Result<CorrelationResult> {
    check_times(t1, t2)?;
    let (sl, sr) = (f64::from(s_l), f64::from(s_r));
    let (s1, c1) = (xi * t1).sin_cos();
    let (s2, c2) = (xi * t2).sin_cos();
    let sum = (xi * (t1 + t2)).cos();
    let g2 = sl * sr * sum * sum
        + sl * (sl - 1.0) * c1 * c1 * s2 * s2
        + sr * (sr - 1.0) * s1 * s1 * c2 * c2;
    let n_left = c1 * c1 * sl + s1 * s1 * sr;
    let n_right = c2 * c2 * sr + s2 * s2 * sl;
    Ok(CorrelationResult::from_moments(g2, n_left, n_right, scale, 0.0))
}

/// Fock input |s_L, s_R⟩ under two-mode squeezing ξ.
pub fn g2_squeeze_fock(
    s_l: u32,
    s_r: u32,
    xi: f64,
    t1: f64,
    t2: f64,
    scale: &CorrelationScale,
) -> Result<CorrelationResult> {
    check_times(t1, t2)?;
    let (sl, sr) = (f64::from(s_l), f64::from(s_r));
    let (c1, s1) = ((xi * t1).cosh(), (xi * t1).sinh());
    let (c2, s2) = ((xi * t2).cosh(), (xi * t2).sinh());
    let g2 = c1 * c1 * c2 * c2 * sl * sr
        + (c1 * s2 * sl + s1 * c2 * (sr + 1.0)) * (c1 * s2 * (sl + 1.0) + s1 * c2 * sr)
        + s1 * s1 * s2 * s2 * (sl + 1.0) * (sr + 1.0);
    let n_left = c1 * c1 * sl + s1 * s1 * (sr + 1.0);
    let n_right = c2 * c2 * sr + s2 * s2 * (sl + 1.0);
    Ok(CorrelationResult::from_moments(g2, n_left, n_right, scale, 0.0))
}

/// |cos ξt| below this counts as a tangent pole in the bracketed form.
pub const POLE_GUARD: f64 = 1e-12;

/// Bracketed hopping/Raman form
/// s_L s_R C₁²C₂²[(1 − T₁T₂)² + (s_L−1)/s_R T₂² + (s_R−1)/s_L T₁²] in quanta;
/// `None` where it is singular (s = 0 or cos ξt = 0).
pub fn hopping_bracket_form(s_l: u32, s_r: u32, xi: f64, t1: f64, t2: f64) -> Option<f64> {
    let (sl, sr) = (f64::from(s_l), f64::from(s_r));
    let (c1, c2) = ((xi * t1).cos(), (xi * t2).cos());
    if s_l == 0 || s_r == 0 || c1.abs() < POLE_GUARD || c2.abs() < POLE_GUARD {
        return None;
    }
    let (tn1, tn2) = ((xi * t1).tan(), (xi * t2).tan());
    Some(
        sl * sr * c1 * c1 * c2 * c2
            * ((1.0 - tn1 * tn2).powi(2) + (sl - 1.0) / sr * tn2 * tn2 + (sr - 1.0) / sl * tn1 * tn1),
    )
}

/// Bracketed squeeze form in quanta; `None` for s_L = 0 or s_R = 0.
pub fn squeeze_bracket_form(s_l: u32, s_r: u32, xi: f64, t1: f64, t2: f64) -> Option<f64> {
    if s_l == 0 || s_r == 0 {
        return None;
    }
    let (sl, sr) = (f64::from(s_l), f64::from(s_r));
    let (c1, c2) = ((xi * t1).cosh(), (xi * t2).cosh());
    let (tn1, tn2) = ((xi * t1).tanh(), (xi * t2).tanh());
    let p = tn1 * tn2;
    Some(
        sl * sr * c1 * c1 * c2 * c2
            * (1.0
                + p
                + (sl + 1.0) * (sr + 1.0) / (sl * sr) * (p * p + p)
                + (sl + 1.0) / sr * tn2 * tn2
                + (sr + 1.0) / sl * tn1 * tn1),
    )
}

/// Time of the first Hong–Ou–Mandel dip, π/(4|ξ|).
pub fn hom_dip(xi: f64) -> Result<f64> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::NoInteraction);
    }
    Ok(std::f64::consts::PI / (4.0 * xi.abs()))
}

/// Input state for the generic evaluators.
#[derive(Debug, Clone)]
pub enum StateRef<'a> {
    Gaussian(&'a GaussianState),
    Fock(&'a FockState),
}

/// Coefficients of c(t) = Σ A c + B c† over ζ = (c; c†).
fn annihilator(t: &BogoliubovTransform, mode: usize) -> DVector<C64> {
    let n = t.dim();
    let mut v = DVector::zeros(2 * n);
    for j in 0..n {
        v[j] = t.a_coeffs[(mode, j)];
        v[n + j] = t.b_coeffs[(mode, j)];
    }
    v
}

fn dagger(v: &DVector<C64>) -> DVector<C64> {
    let n = v.len() / 2;
    let mut d = DVector::zeros(2 * n);
    for j in 0..n {
        d[j] = v[n + j].conj();
        d[n + j] = v[j].conj();
    }
    d
}

/// ⟨X_1 X_2 … X_k⟩ for linear operators X_i (k ≤ 4) in a Gaussian state.
fn gaussian_moment(ops: &[&DVector<C64>], means: &DVector<C64>, gamma: &nalgebra::DMatrix<C64>) -> C64 {
    let mu: Vec<C64> = ops.iter().map(|x| x.dot(means)).collect();
    // ordered cumulant ⟨X_i X_j⟩ − μ_i μ_j for i < j
    let cum = |i: usize, j: usize| (ops[i].transpose() * gamma * ops[j])[(0, 0)] - mu[i] * mu[j];
    match ops.len() {
        2 => cum(0, 1) + mu[0] * mu[1],
        4 => {
            let c = |i, j| cum(i, j);
            c(0, 1) * c(2, 3)
                + c(0, 2) * c(1, 3)
                + c(0, 3) * c(1, 2)
                + mu[0] * mu[1] * c(2, 3)
                + mu[0] * mu[2] * c(1, 3)
                + mu[0] * mu[3] * c(1, 2)
                + mu[1] * mu[2] * c(0, 3)
                + mu[1] * mu[3] * c(0, 2)
                + mu[2] * mu[3] * c(0, 1)
                + mu[0] * mu[1] * mu[2] * mu[3]
        }
        _ => unreachable!("only second and fourth moments are needed"),
    }
}

fn apply_op(psi: &FockState, x: &DVector<C64>) -> Result<FockState> {
    let n = psi.modes();
    psi.apply_ladder(&x.as_slice()[..n], &x.as_slice()[n..])
}

/// G² and G¹ from Heisenberg transforms at t1 and t2, either by Wick's
/// theorem (Gaussian input) or by direct operator application (Fock input).
/// `left` and `right` index the pair within the transforms.
pub fn g2_generic(
    state: StateRef<'_>,
    at_t1: &BogoliubovTransform,
    at_t2: &BogoliubovTransform,
    left: usize,
    right: usize,
    scale: &CorrelationScale,
) -> Result<CorrelationResult> {
    let n = at_t1.dim();
    if at_t2.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: at_t2.dim() });
    }
    if left >= n || right >= n {
        return Err(Error::DimensionMismatch { expected: n, found: left.max(right) + 1 });
    }
    let a = annihilator(at_t1, left);
    let b = annihilator(at_t2, right);
    let (ad, bd) = (dagger(&a), dagger(&b));

    let (g2, n_left, n_right) = match state {
        StateRef::Gaussian(s) => {
            if s.modes() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.modes() });
            }
            let means = s.ladder_means();
            let gamma = s.ladder_moments();
            (
                gaussian_moment(&[&ad, &bd, &a, &b], &means, &gamma).re,
                gaussian_moment(&[&ad, &a], &means, &gamma).re,
                gaussian_moment(&[&bd, &b], &means, &gamma).re,
            )
        }
        StateRef::Fock(psi) => {
            if psi.modes() != n {
                return Err(Error::DimensionMismatch { expected: n, found: psi.modes() });
            }
            // four ladder steps never reach the enlarged cutoff
            let wide: Vec<usize> = psi.cutoffs.iter().map(|c| c + 4).collect();
            let psi = psi.embed(&wide)?;
            let right_then_left = apply_op(&apply_op(&psi, &b)?, &a)?;
            let left_then_right = apply_op(&apply_op(&psi, &a)?, &b)?;
            let na = apply_op(&psi, &a)?;
            let nb = apply_op(&psi, &b)?;
            // ⟨a†b† a b⟩ = ⟨(b a)ψ | (a b)ψ⟩
            (
                left_then_right.inner(&right_then_left)?.re,
                na.norm().powi(2),
                nb.norm().powi(2),
            )
        }
    };
    Ok(CorrelationResult::from_moments(g2, n_left, n_right, scale, NORMALIZATION_FLOOR))
}

fn fock_oracle_once(
    h: &QuadraticHamiltonian,
    psi0: &FockState,
    left: usize,
    right: usize,
    t1: f64,
    t2: f64,
) -> Result<(f64, f64, f64, f64)> {
    let prop = FockPropagator::new(h, &psi0.cutoffs)?;
    let mut leak = 0.0_f64;
    let mut ev = |psi: &FockState, t: f64| -> Result<FockState> {
        let out = prop.evolve(psi, t)?;
        leak = leak.max(out.leakage);
        Ok(out)
    };
    // U†(t1) a U(t1) U†(t2) b U(t2) |ψ⟩
    let b_t2 = ev(psi0, t2)?.annihilate(right);
    let n_right = b_t2.norm().powi(2);
    let x = ev(&b_t2, t1 - t2)?.annihilate(left);
    let chi2 = ev(&x, -t1)?;
    // U†(t2) b U(t2) U†(t1) a U(t1) |ψ⟩
    let y = ev(psi0, t1)?.annihilate(left);
    let n_left = y.norm().powi(2);
    let y = ev(&y, t2 - t1)?.annihilate(right);
    let chi1 = ev(&y, -t2)?;
    Ok((chi1.inner(&chi2)?.re, n_left, n_right, leak))
}

/// Brute-force two-time correlation: Schrödinger-picture Fock evolution
/// under a static Hamiltonian, independent of any closed form. Cutoffs are
/// doubled once if the top layer picks up more than the leakage limit.
pub fn g2_fock_oracle(
    h: &QuadraticHamiltonian,
    psi0: &FockState,
    left: usize,
    right: usize,
    t1: f64,
    t2: f64,
    scale: &CorrelationScale,
) -> Result<CorrelationResult> {
    check_times(t1, t2)?;
    if h.dim() != psi0.modes() {
        return Err(Error::DimensionMismatch { expected: psi0.modes(), found: h.dim() });
    }
    let mut run = fock_oracle_once(h, psi0, left, right, t1, t2)?;
    if run.3 > LEAKAGE_LIMIT {
        let doubled: Vec<usize> = psi0.cutoffs.iter().map(|c| 2 * c).collect();
        run = fock_oracle_once(h, &psi0.embed(&doubled)?, left, right, t1, t2)?;
        if run.3 > LEAKAGE_LIMIT {
            return Err(Error::LeakageExceeded { leakage: run.3, limit: LEAKAGE_LIMIT });
        }
    }
    Ok(CorrelationResult::from_moments(run.0, run.1, run.2, scale, NORMALIZATION_FLOOR))
}

/// Initial state of the resonant pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    FockPair { s_l: u32, s_r: u32 },
    Vacuum,
    Gaussian(GaussianState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRequest {
    pub initial: InitialState,
    pub resonance: ResonanceKind,
    /// Effective coupling [rad/s].
    pub xi: f64,
    pub t1: f64,
    pub t2: f64,
}

impl CorrelationRequest {
    pub fn evaluate(&self, scale: &CorrelationScale) -> Result<CorrelationResult> {
        check_times(self.t1, self.t2)?;
        let squeeze = match self.resonance {
            ResonanceKind::DegenerateHopping | ResonanceKind::RamanLtoR | ResonanceKind::RamanRtoL => false,
            ResonanceKind::TwoModeSqueeze => true,
            other => {
                return Err(Error::UnsupportedResonance(format!(
                    "no two-mode correlation model for {other:?}"
                )))
            }
        };
        let (s_l, s_r) = match &self.initial {
            InitialState::FockPair { s_l, s_r } => (*s_l, *s_r),
            InitialState::Vacuum => (0, 0),
            InitialState::Gaussian(state) => {
                let evolve = |t| {
                    if squeeze {
                        evolve_squeeze(self.xi, 0.0, 0.0, t)
                    } else {
                        evolve_raman(self.xi, 0.0, 0.0, t)
                    }
                };
                return g2_generic(
                    StateRef::Gaussian(state),
                    &evolve(self.t1),
                    &evolve(self.t2),
                    0,
                    1,
                    scale,
                );
            }
        };
        if squeeze {
            g2_squeeze_fock(s_l, s_r, self.xi, self.t1, self.t2, scale)
        } else {
            g2_hopping_raman_fock(s_l, s_r, self.xi, self.t1, self.t2, scale)
        }
    }
}

/// Evaluates `request` at every (t1, t2) point.
pub fn g2_grid(
    exec: Exec,
    request: &CorrelationRequest,
    times: &[(f64, f64)],
    scale: &CorrelationScale,
) -> Result<Vec<CorrelationResult>> {
    exec.try_map(times, |&(t1, t2)| {
        CorrelationRequest { t1, t2, ..request.clone() }.evaluate(scale)
    })
}
