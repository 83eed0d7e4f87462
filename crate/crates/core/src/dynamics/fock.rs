use num_complex::Complex64;

use crate::circuit::HBAR;
use crate::error::{Error, Result};
use crate::hamiltonian::QuadraticHamiltonian;

type C64 = Complex64;

pub const DEFAULT_HOPPING_CUTOFF: usize = 10;
pub const DEFAULT_SQUEEZE_CUTOFF: usize = 40;
pub const LEAKAGE_LIMIT: f64 = 1e-8;

/// Truncated multimode Fock state. `cutoffs[k]` is the largest occupation
/// kept for mode k; mode 0 is the most significant digit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub cutoffs: Vec<usize>,
    pub amplitudes: Vec<C64>,
    /// Largest top-layer probability seen during the last propagation.
    pub leakage: f64,
}

impl FockState {
    pub fn vacuum(cutoffs: &[usize]) -> Self {
        Self::basis(cutoffs, &vec![0; cutoffs.len()]).expect("vacuum fits any cutoff")
    }

    pub fn basis(cutoffs: &[usize], occupations: &[usize]) -> Result<Self> {
        if cutoffs.len() != occupations.len() {
            return Err(Error::DimensionMismatch { expected: cutoffs.len(), found: occupations.len() });
        }
        if cutoffs.iter().zip(occupations).any(|(&c, &n)| n > c) {
            return Err(Error::InvalidParams(format!(
                "occupations {occupations:?} exceed cutoffs {cutoffs:?}"
            )));
        }
        let mut s = Self::zeros(cutoffs);
        let i = s.index(occupations);
        s.amplitudes[i] = C64::new(1.0, 0.0);
        s.leakage = s.top_layer_probability();
        Ok(s)
    }

    fn zeros(cutoffs: &[usize]) -> Self {
        let dim = cutoffs.iter().map(|c| c + 1).product();
        FockState { cutoffs: cutoffs.to_vec(), amplitudes: vec![C64::new(0.0, 0.0); dim], leakage: 0.0 }
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.modes()];
        for k in (0..self.modes().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * (self.cutoffs[k + 1] + 1);
        }
        s
    }

    pub fn index(&self, occupations: &[usize]) -> usize {
        occupations.iter().zip(self.strides()).map(|(n, s)| n * s).sum()
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let mut rest = index;
        self.strides()
            .iter()
            .map(|&s| {
                let n = rest / s;
                rest %= s;
                n
            })
            .collect()
    }

    /// Amplitude of a basis state; zero outside the truncation.
    pub fn amplitude(&self, occupations: &[usize]) -> C64 {
        if occupations.len() != self.modes()
            || occupations.iter().zip(&self.cutoffs).any(|(n, c)| n > c)
        {
            return C64::new(0.0, 0.0);
        }
        self.amplitudes[self.index(occupations)]
    }

    pub fn probability(&self, occupations: &[usize]) -> f64 {
        self.amplitude(occupations).norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.cutoffs != other.cutoffs {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Probability carried by basis states with some mode at its cutoff.
    pub fn top_layer_probability(&self) -> f64 {
        let top = self.top_layer_mask();
        self.amplitudes.iter().zip(&top).filter(|(_, &t)| t).map(|(z, _)| z.norm_sqr()).sum()
    }

    /// Flags basis states with some mode at its cutoff.
    fn top_layer_mask(&self) -> Vec<bool> {
        let strides = self.strides();
        (0..self.dim())
            .map(|i| strides.iter().zip(&self.cutoffs).any(|(&s, &c)| (i / s) % (c + 1) == c))
            .collect()
    }

    /// ⟨a_k† a_k⟩.
    pub fn mean_number(&self, k: usize) -> f64 {
        let s = self.strides()[k];
        let c = self.cutoffs[k] + 1;
        self.amplitudes.iter().enumerate().map(|(i, z)| ((i / s) % c) as f64 * z.norm_sqr()).sum()
    }

    /// Σ_k (c_k a_k + d_k a_k†) |ψ⟩, with creation truncated at the cutoff.
    pub fn apply_ladder(&self, annihilate: &[C64], create: &[C64]) -> Result<Self> {
        let m = self.modes();
        if annihilate.len() != m || create.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: annihilate.len() });
        }
        let strides = self.strides();
        let mut out = Self::zeros(&self.cutoffs);
        for (i, &z) in self.amplitudes.iter().enumerate() {
            if z.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..m {
                let n = (i / strides[k]) % (self.cutoffs[k] + 1);
                if n > 0 && annihilate[k] != C64::new(0.0, 0.0) {
                    out.amplitudes[i - strides[k]] += annihilate[k] * z * (n as f64).sqrt();
                }
                if n < self.cutoffs[k] && create[k] != C64::new(0.0, 0.0) {
                    out.amplitudes[i + strides[k]] += create[k] * z * ((n + 1) as f64).sqrt();
                }
            }
        }
        Ok(out)
    }

    pub fn annihilate(&self, k: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); self.modes()];
        c[k] = C64::new(1.0, 0.0);
        self.apply_ladder(&c, &vec![C64::new(0.0, 0.0); self.modes()]).expect("matching sizes")
    }

    pub fn create(&self, k: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); self.modes()];
        c[k] = C64::new(1.0, 0.0);
        self.apply_ladder(&vec![C64::new(0.0, 0.0); self.modes()], &c).expect("matching sizes")
    }

    /// Copy into larger cutoffs (amplitudes of truncated states are dropped
    /// when shrinking).
    pub fn embed(&self, cutoffs: &[usize]) -> Result<Self> {
        if cutoffs.len() != self.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), found: cutoffs.len() });
        }
        let mut out = Self::zeros(cutoffs);
        for (i, &z) in self.amplitudes.iter().enumerate() {
            let occ = self.occupations(i);
            if occ.iter().zip(cutoffs).all(|(n, c)| n <= c) {
                let j = out.index(&occ);
                out.amplitudes[j] = z;
            }
        }
        out.leakage = out.top_layer_probability();
        Ok(out)
    }
}

/// Hamiltonian restricted to a truncated Fock space, in units of ħ·rad/s.
/// Columns are stored compressed by source: column `s` holds the (target,
/// value) pairs in `rows[col_start[s]..col_start[s + 1]]`.
struct FockOperator {
    col_start: Vec<usize>,
    rows: Vec<(usize, C64)>,
    bound: f64,
}

impl FockOperator {
    fn build(h: &QuadraticHamiltonian, cutoffs: &[usize]) -> Self {
        let probe = FockState::zeros(cutoffs);
        let m = cutoffs.len();
        let number = h.number_block();
        let dim = probe.dim();
        let mut entries = Vec::new();
        let cmax = cutoffs.iter().copied().max().unwrap_or(0) as f64 + 1.0;
        let mut bound = 0.0;
        for i in 0..m {
            for j in 0..m {
                bound += number[(i, j)].norm() / HBAR * cmax;
                if j >= i {
                    bound += 2.0 * h.pairing[(i, j)].norm() / HBAR * cmax;
                }
            }
        }
        for src in 0..dim {
            let occ = probe.occupations(src);
            for i in 0..m {
                for j in 0..m {
                    // a_i† a_j
                    let hij = number[(i, j)] / HBAR;
                    if hij.norm() != 0.0 {
                        let mut o = occ.clone();
                        if o[j] > 0 {
                            let mut amp = (o[j] as f64).sqrt();
                            o[j] -= 1;
                            if o[i] < cutoffs[i] {
                                amp *= ((o[i] + 1) as f64).sqrt();
                                o[i] += 1;
                                entries.push((probe.index(&o), src, hij * amp));
                            }
                        }
                    }
                    if j < i {
                        continue;
                    }
                    let p = h.pairing[(i, j)] / HBAR;
                    if p.norm() == 0.0 {
                        continue;
                    }
                    // P a_i a_j
                    let mut o = occ.clone();
                    if o[j] > 0 {
                        let mut amp = (o[j] as f64).sqrt();
                        o[j] -= 1;
                        if o[i] > 0 {
                            amp *= (o[i] as f64).sqrt();
                            o[i] -= 1;
                            entries.push((probe.index(&o), src, p * amp));
                        }
                    }
                    // P* a_j† a_i†
                    let mut o = occ.clone();
                    if o[i] < cutoffs[i] {
                        let mut amp = ((o[i] + 1) as f64).sqrt();
                        o[i] += 1;
                        if o[j] < cutoffs[j] {
                            amp *= ((o[j] + 1) as f64).sqrt();
                            o[j] += 1;
                            entries.push((probe.index(&o), src, p.conj() * amp));
                        }
                    }
                }
            }
        }
        // entries are generated in source order; duplicates are summed by apply
        let mut col_start = vec![0; dim + 1];
        for &(_, src, _) in &entries {
            col_start[src + 1] += 1;
        }
        for s in 0..dim {
            col_start[s + 1] += col_start[s];
        }
        let rows = entries.into_iter().map(|(t, _, v)| (t, v)).collect();
        FockOperator { col_start, rows, bound }
    }

    /// Basis states connected to the support of `x` by repeated action of
    /// H, in ascending order. The evolution never leaves this set.
    fn reachable(&self, x: &[C64]) -> Vec<usize> {
        let mut seen = vec![false; x.len()];
        let mut stack: Vec<usize> = (0..x.len()).filter(|&i| x[i].norm_sqr() != 0.0).collect();
        stack.iter().for_each(|&i| seen[i] = true);
        let mut out = stack.clone();
        while let Some(s) = stack.pop() {
            for &(t, _) in &self.rows[self.col_start[s]..self.col_start[s + 1]] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                    out.push(t);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// y = H x on a set closed under H; entries of y outside it are untouched.
    fn apply(&self, support: &[usize], x: &[C64], y: &mut [C64]) {
        support.iter().for_each(|&i| y[i] = C64::new(0.0, 0.0));
        for &s in support {
            let xs = x[s];
            for &(t, v) in &self.rows[self.col_start[s]..self.col_start[s + 1]] {
                y[t] += v * xs;
            }
        }
    }
}

/// Static Hamiltonian compiled onto fixed cutoffs, for repeated evolutions
/// of states on the same truncated space.
pub struct FockPropagator {
    op: FockOperator,
    cutoffs: Vec<usize>,
}

impl FockPropagator {
    pub fn new(h: &QuadraticHamiltonian, cutoffs: &[usize]) -> Result<Self> {
        if h.dim() != cutoffs.len() {
            return Err(Error::DimensionMismatch { expected: cutoffs.len(), found: h.dim() });
        }
        Ok(FockPropagator { op: FockOperator::build(h, cutoffs), cutoffs: cutoffs.to_vec() })
    }

    /// exp(−iHt/ħ)|ψ⟩ by truncated Taylor series with sub-stepping; records
    /// the largest top-layer probability along the way. No leakage policy.
    pub fn evolve(&self, psi0: &FockState, t: f64) -> Result<FockState> {
        if psi0.cutoffs != self.cutoffs {
            return Err(Error::InvalidParams(format!(
                "state cutoffs {:?} differ from propagator cutoffs {:?}",
                psi0.cutoffs, self.cutoffs
            )));
        }
        let op = &self.op;
        let mut psi = psi0.clone();
        psi.leakage = psi.top_layer_probability();
        if t == 0.0 || op.rows.is_empty() {
            return Ok(psi);
        }
        // ‖H dt‖ ≤ 2 keeps Taylor terms below 2²/2! so summation error stays at rounding level
        let substeps = (op.bound * t.abs() / 2.0).ceil().max(1.0) as usize;
        let dt = t / substeps as f64;
        let factor = C64::new(0.0, -dt);
        let dim = psi.dim();
        let support = op.reachable(&psi.amplitudes);
        let top = psi.top_layer_mask();
        let top_support: Vec<usize> = support.iter().copied().filter(|&i| top[i]).collect();
        let mut term = vec![C64::new(0.0, 0.0); dim];
        let mut next = vec![C64::new(0.0, 0.0); dim];
        for _ in 0..substeps {
            for &i in &support {
                term[i] = psi.amplitudes[i];
            }
            for order in 1..60 {
                op.apply(&support, &term, &mut next);
                let scale = factor / order as f64;
                let mut size = 0.0;
                for &i in &support {
                    let tv = next[i] * scale;
                    term[i] = tv;
                    psi.amplitudes[i] += tv;
                    size += tv.norm_sqr();
                }
                if size.sqrt() < 1e-18 {
                    break;
                }
            }
            let leak: f64 = top_support.iter().map(|&i| psi.amplitudes[i].norm_sqr()).sum();
            psi.leakage = psi.leakage.max(leak);
        }
        Ok(psi)
    }
}

/// One-shot [`FockPropagator::evolve`].
pub fn fock_evolve(h: &QuadraticHamiltonian, psi0: &FockState, t: f64) -> Result<FockState> {
    FockPropagator::new(h, &psi0.cutoffs)?.evolve(psi0, t)
}

/// Fock-space evolution under a static Hamiltonian. When the top layer
/// picks up more than [`LEAKAGE_LIMIT`], cutoffs are doubled once and the
/// run repeated; a second breach is an error.
pub fn fock_propagate(h: &QuadraticHamiltonian, psi0: &FockState, t: f64) -> Result<FockState> {
    if psi0.top_layer_probability() > 0.0 {
        return Err(Error::InvalidParams("initial state populates the top Fock layer".into()));
    }
    let out = fock_evolve(h, psi0, t)?;
    if out.leakage <= LEAKAGE_LIMIT {
        return Ok(out);
    }
    let doubled: Vec<usize> = psi0.cutoffs.iter().map(|c| 2 * c).collect();
    let out = fock_evolve(h, &psi0.embed(&doubled)?, t)?;
    if out.leakage > LEAKAGE_LIMIT {
        return Err(Error::LeakageExceeded { leakage: out.leakage, limit: LEAKAGE_LIMIT });
    }
    Ok(out)
}

/// Beam-splitter output from |1,1⟩ under ħξ(a†b + ab†), interaction frame:
/// cos(2ξt)|1,1⟩ − i sin(2ξt)(|2,0⟩ + |0,2⟩)/√2.
pub fn hom_output_state(xi: f64, t: f64) -> FockState {
    let mut s = FockState::zeros(&[3, 3]);
    let (sn, cs) = (2.0 * xi * t).sin_cos();
    let noon = C64::new(0.0, -sn * std::f64::consts::FRAC_1_SQRT_2);
    let i11 = s.index(&[1, 1]);
    let i20 = s.index(&[2, 0]);
    let i02 = s.index(&[0, 2]);
    s.amplitudes[i11] = C64::new(cs, 0.0);
    s.amplitudes[i20] = noon;
    s.amplitudes[i02] = noon;
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ModeIndex;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pair() -> [ModeIndex; 2] {
        [ModeIndex::left(50), ModeIndex::right(50)]
    }

    fn hopping(xi: f64) -> QuadraticHamiltonian {
        let mut h = QuadraticHamiltonian::zeros(&pair());
        h.set_hopping(0, 1, C64::new(HBAR * xi, 0.0));
        h
    }

    fn squeeze(xi: f64) -> QuadraticHamiltonian {
        let mut h = QuadraticHamiltonian::zeros(&pair());
        h.set_pairing(0, 1, C64::new(HBAR * xi, 0.0));
        h
    }

    #[test]
    fn indexing_round_trips() {
        let s = FockState::vacuum(&[3, 5, 2]);
        assert_eq!(s.dim(), 4 * 6 * 3);
        for i in 0..s.dim() {
            assert_eq!(s.index(&s.occupations(i)), i);
        }
        assert!(FockState::basis(&[2, 2], &[3, 0]).is_err());
    }

    #[test]
    fn ladder_actions() {
        let s = FockState::basis(&[4, 4], &[2, 1]).unwrap();
        let a = s.annihilate(0);
        assert_relative_eq!(a.amplitude(&[1, 1]).re, 2.0_f64.sqrt());
        let c = s.create(1);
        assert_relative_eq!(c.amplitude(&[2, 2]).re, 2.0_f64.sqrt());
        assert_relative_eq!(s.mean_number(0), 2.0);
        let top = FockState::basis(&[2, 2], &[2, 0]).unwrap();
        assert_eq!(top.create(0).norm(), 0.0);
    }

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let s = FockState::basis(&[5, 5], &[1, 2]).unwrap();
        let out = fock_propagate(&QuadraticHamiltonian::zeros(&pair()), &s, 3.0).unwrap();
        assert_eq!(out.amplitudes, s.amplitudes);
    }

    #[test]
    fn hopping_from_one_one_matches_closed_form() {
        let xi = 0.8;
        let psi0 = FockState::basis(&[DEFAULT_HOPPING_CUTOFF; 2], &[1, 1]).unwrap();
        for &t in &[0.0, 0.2, 0.7, PI / (4.0 * xi), 2.9] {
            let out = fock_propagate(&hopping(xi), &psi0, t).unwrap();
            let closed = hom_output_state(xi, t);
            for occ in [[1, 1], [2, 0], [0, 2], [0, 0]] {
                let d = (out.amplitude(&occ) - closed.amplitude(&occ)).norm();
                assert!(d < 1e-10, "t={t} occ={occ:?} d={d:e}");
            }
            assert!((out.norm() - 1.0).abs() < 1e-10);
            assert!((out.mean_number(0) + out.mean_number(1) - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hom_state_is_normalized() {
        for &t in &[0.0, 0.3, 1.1] {
            assert_relative_eq!(hom_output_state(1.3, t).norm(), 1.0, epsilon = 1e-15);
        }
        let dip = hom_output_state(1.0, PI / 4.0);
        assert!(dip.probability(&[1, 1]) < 1e-30);
        assert_relative_eq!(dip.probability(&[2, 0]), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn squeeze_from_vacuum_matches_sinh() {
        let xi = 1.0;
        let psi0 = FockState::vacuum(&[DEFAULT_SQUEEZE_CUTOFF; 2]);
        for &t in &[0.2, 0.6, 1.0] {
            let out = fock_propagate(&squeeze(xi), &psi0, t).unwrap();
            assert!(out.leakage <= LEAKAGE_LIMIT);
            assert!((out.mean_number(0) - (xi * t).sinh().powi(2)).abs() < 1e-8);
            assert!((out.mean_number(0) - out.mean_number(1)).abs() < 1e-10);
        }
    }

    #[test]
    fn leakage_triggers_doubling_then_error() {
        let psi0 = FockState::vacuum(&[4, 4]);
        // ξt = 0.2 overflows cutoff 4 but fits cutoff 8
        let out = fock_propagate(&squeeze(1.0), &psi0, 0.2).unwrap();
        assert!(out.leakage <= LEAKAGE_LIMIT);
        let err = fock_propagate(&squeeze(1.0), &psi0, 2.0).unwrap_err();
        assert!(matches!(err, Error::LeakageExceeded { .. }));
    }
}
