use nalgebra::DMatrix;
use num_complex::Complex64;

use super::bogoliubov::quadrature_map;
use crate::circuit::{DriveSpec, HBAR};
use crate::error::{Error, Result};
use crate::hamiltonian::{Quadrature, QuadraticHamiltonian, ToneTag};

type C64 = Complex64;

const MAX_STEPS: usize = 50_000_000;

/// Ω = ⊕ [[0, 1], [−1, 0]] on (x_1, p_1, …).
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// max |SᵀΩS − Ω|.
pub fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let o = symplectic_form(s.nrows() / 2);
    (s.transpose() * &o * s - o).amax()
}

/// Real generator G [1/s] of q̇ = G q for the Heisenberg equations of `h`.
pub fn generator(h: &QuadraticHamiltonian) -> DMatrix<f64> {
    let n = h.dim();
    let hm = h.number_block();
    let mut p_hat = h.pairing.clone();
    for i in 0..n {
        p_hat[(i, i)] *= 2.0;
    }
    // ζ̇ = K ζ with K = −(i/ħ) [[Hm, P̂*], [−P̂, −Hm*]]
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&hm);
    k.view_mut((0, n), (n, n)).copy_from(&p_hat.map(|z| z.conj()));
    k.view_mut((n, 0), (n, n)).copy_from(&(-&p_hat));
    k.view_mut((n, n), (n, n)).copy_from(&(-hm.map(|z| z.conj())));
    k *= C64::new(0.0, -1.0 / HBAR);
    let w = quadrature_map(n);
    (w.adjoint() * k * w).map(|z| z.re)
}

struct Schedule {
    pieces: Vec<(DMatrix<f64>, Option<ToneTag>)>,
    omegas: Vec<f64>,
}

impl Schedule {
    fn new(hs: &[QuadraticHamiltonian], drive: &DriveSpec) -> Result<Self> {
        let n = hs.first().map_or(0, |h| h.dim());
        let mut pieces = Vec::with_capacity(hs.len());
        for h in hs {
            if h.modes != hs[0].modes {
                return Err(Error::DimensionMismatch { expected: n, found: h.dim() });
            }
            if let Some(tag) = h.time_tag {
                if tag.tone >= drive.tones.len() {
                    return Err(Error::InvalidParams(format!("schedule refers to missing tone {}", tag.tone)));
                }
            }
            pieces.push((generator(h), h.time_tag));
        }
        Ok(Schedule { pieces, omegas: drive.tones.iter().map(|t| t.omega).collect() })
    }

    fn at(&self, t: f64, out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for (g, tag) in &self.pieces {
            let w = match tag {
                None => 1.0,
                Some(tag) => {
                    let phase = self.omegas[tag.tone] * t;
                    match tag.quadrature {
                        Quadrature::Sin => phase.sin(),
                        Quadrature::Cos => phase.cos(),
                    }
                }
            };
            if w != 0.0 {
                out.zip_apply(g, |o, x| *o += w * x);
            }
        }
    }

    fn scale(&self) -> f64 {
        self.pieces.iter().map(|(g, _)| g.amax()).sum()
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Symplectic propagator from `t0` to `t1` for a (possibly time-tagged)
/// Hamiltonian schedule, written for canonical operators.
///
/// Steps are controlled so that the local error per unit time stays below
/// `tol / (t1 − t0)`, which bounds the accumulated error by roughly `tol`.
pub fn symplectic_propagate(
    schedule: &[QuadraticHamiltonian],
    drive: &DriveSpec,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<DMatrix<f64>> {
    Ok(propagate_counted(schedule, drive, t0, t1, tol)?.0)
}

/// As [`symplectic_propagate`], also returning the number of accepted steps.
pub fn propagate_counted(
    schedule: &[QuadraticHamiltonian],
    drive: &DriveSpec,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<(DMatrix<f64>, usize)> {
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParams(format!("need t1 ≥ t0, got [{t0}, {t1}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    if schedule.is_empty() {
        return Err(Error::InvalidParams("empty Hamiltonian schedule".into()));
    }
    let n2 = 2 * schedule[0].dim();
    let sched = Schedule::new(schedule, drive)?;
    let mut s = DMatrix::<f64>::identity(n2, n2);
    let span = t1 - t0;
    let rate = sched.scale();
    if span == 0.0 || rate == 0.0 {
        return Ok((s, 0));
    }

    let mut k: Vec<DMatrix<f64>> = (0..7).map(|_| DMatrix::zeros(n2, n2)).collect();
    let mut g = DMatrix::zeros(n2, n2);
    let mut stage = DMatrix::zeros(n2, n2);
    let mut t = t0;
    let mut h = (0.05 / rate).min(span);
    let min_step = span * 1e-15;
    sched.at(t, &mut g);
    k[0] = &g * &s;
    let mut steps = 0usize;
    let mut attempts = 0usize;

    while t < t1 {
        attempts += 1;
        if attempts > MAX_STEPS {
            return Err(Error::Stiffness { t, step: h });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        for i in 1..7 {
            stage.copy_from(&s);
            for (j, kj) in k.iter().enumerate().take(i) {
                if A[i][j] != 0.0 {
                    let c = h * A[i][j];
                    stage.zip_apply(kj, |o, x| *o += c * x);
                }
            }
            sched.at(t + C[i] * h, &mut g);
            g.mul_to(&stage, &mut k[i]);
        }
        // stage now holds the 5th-order solution (row 6 of A is b5)
        let mut err = DMatrix::<f64>::zeros(n2, n2);
        for (ei, ki) in E.iter().zip(&k) {
            let c = h * ei;
            err.zip_apply(ki, |o, x| *o += c * x);
        }
        let scale = stage.amax().max(1.0);
        let budget = tol * h / span;
        let ratio = err.amax() / (scale * budget);
        if ratio <= 1.0 {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut s, &mut stage);
            k.swap(0, 6);
            steps += 1;
        }
        let factor: f64 = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.25)).clamp(0.2, 5.0) };
        h *= factor;
        if t < t1 && h < min_step {
            return Err(Error::Stiffness { t, step: h });
        }
    }
    Ok((s, steps))
}

/// Propagator of a static Hamiltonian over `[0, t]`.
pub fn propagate_static(h: &QuadraticHamiltonian, t: f64, tol: f64) -> Result<DMatrix<f64>> {
    let mut h = h.clone();
    h.time_tag = None;
    symplectic_propagate(std::slice::from_ref(&h), &DriveSpec { e0: 0.0, tones: vec![] }, 0.0, t, tol)
}
