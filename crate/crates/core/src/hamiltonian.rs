//! Quadratic bosonic Hamiltonians for the composed line.
//!
//! Expanding the squared SQUID coupling gives six families of terms: the
//! static energy shift (ES), inter-line hopping (HP), intra-line Raman (RM),
//! single-mode squeezing (1S), intra-line two-mode squeezing (2S) and
//! inter-line squeezing (IS). Term constructors return coefficients for the
//! circuit's own ladder operators (LHTL operators are not canonically
//! normalized); [`QuadraticHamiltonian::canonicalize`] rescales them.
//!
//! Convention: `H = Σ_ij h_ij a_i† a_j + Σ_i d_i a_i† a_i + Σ_{i≤j} (P_ij a_i a_j + h.c.)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    chi_from_energy, phase_factor_sq, CircuitParams, DriveSpec, FrequencyChoice, Line, ModeIndex,
    HBAR,
};
use crate::error::{Error, Result};
use crate::matching::{ResonanceKind, ResonanceSpec};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Sin,
    Cos,
}

/// Marks a Hamiltonian piece whose weight is `sin(Ω_m t)` or `cos(Ω_m t)`
/// for tone `m` of a drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToneTag {
    pub tone: usize,
    pub quadrature: Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    pub modes: Vec<ModeIndex>,
    /// Coefficients of a_i† a_j [J]; Hermitian.
    pub hopping: DMatrix<C64>,
    /// Coefficients of a_i a_j for i ≤ j [J]; stored symmetric.
    pub pairing: DMatrix<C64>,
    /// Number-operator energy shifts [J].
    pub diagonal_shift: DVector<f64>,
    pub time_tag: Option<ToneTag>,
}

impl QuadraticHamiltonian {
    pub fn zeros(modes: &[ModeIndex]) -> Self {
        let n = modes.len();
        QuadraticHamiltonian {
            modes: modes.to_vec(),
            hopping: DMatrix::zeros(n, n),
            pairing: DMatrix::zeros(n, n),
            diagonal_shift: DVector::zeros(n),
            time_tag: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn index_of(&self, mode: ModeIndex) -> Result<usize> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .ok_or(Error::UnknownMode { line: mode.line, j: mode.j })
    }

    /// Sets h_ij and its Hermitian partner.
    pub fn set_hopping(&mut self, i: usize, j: usize, value: C64) {
        self.hopping[(i, j)] = value;
        self.hopping[(j, i)] = value.conj();
    }

    pub fn set_pairing(&mut self, i: usize, j: usize, value: C64) {
        self.pairing[(i, j)] = value;
        self.pairing[(j, i)] = value;
    }

    pub fn with_tag(mut self, tag: ToneTag) -> Self {
        self.time_tag = Some(tag);
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        QuadraticHamiltonian {
            modes: self.modes.clone(),
            hopping: &self.hopping * C64::new(factor, 0.0),
            pairing: &self.pairing * C64::new(factor, 0.0),
            diagonal_shift: &self.diagonal_shift * factor,
            time_tag: self.time_tag,
        }
    }

    /// Sum of two Hamiltonians on the same mode list; the tag of `self` is kept.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.modes != other.modes {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(QuadraticHamiltonian {
            modes: self.modes.clone(),
            hopping: &self.hopping + &other.hopping,
            pairing: &self.pairing + &other.pairing,
            diagonal_shift: &self.diagonal_shift + &other.diagonal_shift,
            time_tag: self.time_tag,
        })
    }

    /// h + diag(d): the full number-conserving block.
    pub fn number_block(&self) -> DMatrix<C64> {
        let mut m = self.hopping.clone();
        for i in 0..self.dim() {
            m[(i, i)] += C64::new(self.diagonal_shift[i], 0.0);
        }
        m
    }

    fn scale(&self) -> f64 {
        let a = self.hopping.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let b = self.pairing.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let c = self.diagonal_shift.iter().map(|x| x.abs()).fold(0.0, f64::max);
        a.max(b).max(c)
    }

    /// max |h − h†| relative to the largest coefficient.
    pub fn hermiticity_error(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            return 0.0;
        }
        (&self.hopping - self.hopping.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / s
    }

    /// max |P − Pᵀ| relative to the largest coefficient.
    pub fn symmetry_error(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            return 0.0;
        }
        (&self.pairing - self.pairing.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max) / s
    }

    pub fn is_zero(&self) -> bool {
        self.scale() == 0.0
    }

    /// Rewrites coefficients for canonical operators ã = n·a, where n is
    /// [`CircuitParams::ladder_norm`].
    pub fn canonicalize(&self, params: &CircuitParams) -> Result<Self> {
        let norms: Vec<f64> =
            self.modes.iter().map(|&m| params.ladder_norm(m)).collect::<Result<_>>()?;
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.diagonal_shift[i] /= norms[i] * norms[i];
            for j in 0..self.dim() {
                let f = 1.0 / (norms[i] * norms[j]);
                out.hopping[(i, j)] *= f;
                out.pairing[(i, j)] *= f;
            }
        }
        Ok(out)
    }

    /// Time weight of this piece under `drive` (1 when untagged).
    pub fn weight(&self, drive: &DriveSpec, t: f64) -> f64 {
        match self.time_tag {
            None => 1.0,
            Some(tag) => {
                let omega = drive.tones.get(tag.tone).map_or(0.0, |tn| tn.omega);
                match tag.quadrature {
                    Quadrature::Sin => (omega * t).sin(),
                    Quadrature::Cos => (omega * t).cos(),
                }
            }
        }
    }
}

/// Per-mode data entering every term: 1/√(Cω) with bare frequency and e^{ikΔx}.
struct ModeFactors {
    weight: Vec<f64>,
    phase: Vec<C64>,
}

fn mode_factors(params: &CircuitParams, modes: &[ModeIndex]) -> Result<ModeFactors> {
    params.validate()?;
    let mut weight = Vec::with_capacity(modes.len());
    let mut phase = Vec::with_capacity(modes.len());
    for &m in modes {
        let f = params.frequency(m, FrequencyChoice::Bare)?;
        weight.push(1.0 / (params.capacitance(m.line) * f).sqrt());
        let kdx = params.wave_vector(m.j)? * params.dx;
        phase.push(C64::from_polar(1.0, kdx));
    }
    Ok(ModeFactors { weight, phase })
}

/// H_L + H_R: ε_j a†a on the LHTL, ħυ_j b†b on the RHTL.
pub fn free_term(params: &CircuitParams, modes: &[ModeIndex]) -> Result<QuadraticHamiltonian> {
    params.validate()?;
    let mut h = QuadraticHamiltonian::zeros(modes);
    for (i, &m) in modes.iter().enumerate() {
        h.diagonal_shift[i] = match m.line {
            Line::Left => params.epsilon_bare(m.j)?,
            Line::Right => HBAR * params.upsilon_bare(m.j)?,
        };
    }
    Ok(h)
}

/// H_ES: static shift 2χ/(Cω) of every mode's number operator.
pub fn energy_shift_term(
    params: &CircuitParams,
    modes: &[ModeIndex],
    energy: f64,
) -> Result<QuadraticHamiltonian> {
    let f = mode_factors(params, modes)?;
    let chi = chi_from_energy(energy, params);
    let mut h = QuadraticHamiltonian::zeros(modes);
    for i in 0..modes.len() {
        h.diagonal_shift[i] = 2.0 * chi * f.weight[i] * f.weight[i];
    }
    Ok(h)
}

/// H_HP: g_ij a_i b_j† e^{i(k_i − p_j)Δx} + h.c. for every left/right pair,
/// g_ij = −2χ/√(C_l C_r ω_i υ_j).
pub fn hopping_term(
    params: &CircuitParams,
    modes: &[ModeIndex],
    energy: f64,
) -> Result<QuadraticHamiltonian> {
    let f = mode_factors(params, modes)?;
    let chi = chi_from_energy(energy, params);
    let mut h = QuadraticHamiltonian::zeros(modes);
    for (i, mi) in modes.iter().enumerate() {
        for (j, mj) in modes.iter().enumerate() {
            if mi.line == Line::Left && mj.line == Line::Right {
                let g = -2.0 * chi * f.weight[i] * f.weight[j];
                // coefficient of b_j† a_i
                h.set_hopping(j, i, f.phase[i] * f.phase[j].conj() * g);
            }
        }
    }
    Ok(h)
}

/// H_RM: 2χ/(C√(ω_iω_j)) a_i a_j† e^{i(k_i−k_j)Δx} over distinct modes of one line.
pub fn raman_internal_term(
    params: &CircuitParams,
    modes: &[ModeIndex],
    energy: f64,
) -> Result<QuadraticHamiltonian> {
    let f = mode_factors(params, modes)?;
    let chi = chi_from_energy(energy, params);
    let mut h = QuadraticHamiltonian::zeros(modes);
    for (i, mi) in modes.iter().enumerate() {
        for (j, mj) in modes.iter().enumerate() {
            if i != j && mi.line == mj.line {
                let c = 2.0 * chi * f.weight[i] * f.weight[j];
                h.hopping[(j, i)] = f.phase[i] * f.phase[j].conj() * c;
            }
        }
    }
    Ok(h)
}

/// H_1S: χ/(Cω) a_j² e^{2ik_jΔx} + h.c.
pub fn single_mode_squeeze_term(
    params: &CircuitParams,
    modes: &[ModeIndex],
    energy: f64,
) -> Result<QuadraticHamiltonian> {
    let f = mode_factors(params, modes)?;
    let chi = chi_from_energy(energy, params);
    let mut h = QuadraticHamiltonian::zeros(modes);
    for i in 0..modes.len() {
        h.pairing[(i, i)] = f.phase[i] * f.phase[i] * (chi * f.weight[i] * f.weight[i]);
    }
    Ok(h)
}

/// H_2S: χ/(C√(ω_iω_j)) a_i a_j e^{i(k_i+k_j)Δx} + h.c. over ordered pairs of
/// distinct modes of one line.
pub fn two_mode_squeeze_internal_term(
    params: &CircuitParams,
    modes: &[ModeIndex],
    energy: f64,
) -> Result<QuadraticHamiltonian> {
    let f = mode_factors(params, modes)?;
    let chi = chi_from_energy(energy, params);
    let mut h = QuadraticHamiltonian::zeros(modes);
    for (i, mi) in modes.iter().enumerate() {
        for (j, mj) in modes.iter().enumerate().skip(i + 1) {
            if mi.line == mj.line {
                // (i, j) and (j, i) both appear in the ordered sum
                let c = 2.0 * chi * f.weight[i] * f.weight[j];
                h.set_pairing(i, j, f.phase[i] * f.phase[j] * c);
            }
        }
    }
    Ok(h)
}

/// H_IS: −2χ/√(C_lC_rω_iυ_j) a_i b_j e^{i(k_i+p_j)Δx} + h.c.
pub fn interline_squeeze_term(
    params: &CircuitParams,
    modes: &[ModeIndex],
    energy: f64,
) -> Result<QuadraticHamiltonian> {
    let f = mode_factors(params, modes)?;
    let chi = chi_from_energy(energy, params);
    let mut h = QuadraticHamiltonian::zeros(modes);
    for (i, mi) in modes.iter().enumerate() {
        for (j, mj) in modes.iter().enumerate() {
            if mi.line == Line::Left && mj.line == Line::Right {
                let c = -2.0 * chi * f.weight[i] * f.weight[j];
                h.set_pairing(i, j, f.phase[i] * f.phase[j] * c);
            }
        }
    }
    Ok(h)
}

/// All six interaction pieces at one Josephson energy.
#[derive(Debug, Clone)]
pub struct InteractionTerms {
    pub energy_shift: QuadraticHamiltonian,
    pub hopping: QuadraticHamiltonian,
    pub raman: QuadraticHamiltonian,
    pub single_squeeze: QuadraticHamiltonian,
    pub two_mode_squeeze: QuadraticHamiltonian,
    pub interline_squeeze: QuadraticHamiltonian,
}

impl InteractionTerms {
    pub fn build(params: &CircuitParams, modes: &[ModeIndex], energy: f64) -> Result<Self> {
        Ok(InteractionTerms {
            energy_shift: energy_shift_term(params, modes, energy)?,
            hopping: hopping_term(params, modes, energy)?,
            raman: raman_internal_term(params, modes, energy)?,
            single_squeeze: single_mode_squeeze_term(params, modes, energy)?,
            two_mode_squeeze: two_mode_squeeze_internal_term(params, modes, energy)?,
            interline_squeeze: interline_squeeze_term(params, modes, energy)?,
        })
    }

    pub fn total(&self) -> QuadraticHamiltonian {
        // all pieces share a mode list, so `sum` cannot fail here
        [
            &self.hopping,
            &self.raman,
            &self.single_squeeze,
            &self.two_mode_squeeze,
            &self.interline_squeeze,
        ]
        .iter()
        .fold(self.energy_shift.clone(), |acc, h| acc.sum(h).expect("same modes"))
    }
}

/// Lab-frame Hamiltonian of `modes` under `drive`, split into time-tagged
/// pieces and written for canonical operators:
/// `H(t) = H_0 + H_I(E₀) + Σ_m [ε_m sin Ω_m t + κ_m cos Ω_m t] H_I(E₀)`.
pub fn driven_schedule(
    params: &CircuitParams,
    modes: &[ModeIndex],
    drive: &DriveSpec,
) -> Result<Vec<QuadraticHamiltonian>> {
    let interaction = InteractionTerms::build(params, modes, drive.e0)?.total().canonicalize(params)?;
    let free = free_term(params, modes)?.canonicalize(params)?;
    let mut pieces = vec![free.sum(&interaction)?];
    for (m, tone) in drive.tones.iter().enumerate() {
        if tone.eps != 0.0 {
            pieces.push(
                interaction.scaled(tone.eps).with_tag(ToneTag { tone: m, quadrature: Quadrature::Sin }),
            );
        }
        if tone.kappa != 0.0 {
            pieces.push(
                interaction
                    .scaled(tone.kappa)
                    .with_tag(ToneTag { tone: m, quadrature: Quadrature::Cos }),
            );
        }
    }
    Ok(pieces)
}

/// Keeps only the terms of a canonical interaction Hamiltonian (evaluated at
/// E₀) that are static in the frame rotating at `frame` [rad/s] under the
/// drive's modulation. Static diagonal terms are part of the frame and are
/// dropped. Returns the rotating-frame Hamiltonian [J].
pub fn rwa_filter(
    interaction: &QuadraticHamiltonian,
    drive: &DriveSpec,
    frame: &[f64],
    tol: f64,
) -> Result<QuadraticHamiltonian> {
    let n = interaction.dim();
    if frame.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: frame.len() });
    }
    // (frequency, weight) of each Fourier component of E(t)/E₀
    let mut components = vec![(0.0, C64::new(1.0, 0.0))];
    for tone in &drive.tones {
        let w = tone.positive_weight();
        components.push((tone.omega, w));
        components.push((-tone.omega, w.conj()));
    }
    let kept = |net: f64| net.abs() <= tol;

    let mut out = QuadraticHamiltonian::zeros(&interaction.modes);
    let number = interaction.number_block();
    for i in 0..n {
        for j in 0..n {
            let mut h = C64::new(0.0, 0.0);
            let mut p = C64::new(0.0, 0.0);
            for &(freq, w) in &components {
                // a_i† a_j rotates at ν_i − ν_j, a_i a_j at −(ν_i + ν_j)
                if !(i == j && freq == 0.0) && kept(frame[i] - frame[j] + freq) {
                    h += number[(i, j)] * w;
                }
                if kept(-(frame[i] + frame[j]) + freq) {
                    p += interaction.pairing[(i, j)] * w;
                }
            }
            out.hopping[(i, j)] = h;
            out.pairing[(i, j)] = p;
        }
    }
    Ok(out)
}

/// Effective two-mode couplings [rad/s], evaluated from the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConstants {
    pub xi_hp: f64,
    pub xi_rm: f64,
    pub xi_sq: f64,
    pub xi_sl: f64,
    pub xi_sr: f64,
    /// Static hopping coefficient g/ħ for the pair.
    pub g_ij: f64,
}

/// Couplings for a (left, right) pair using tone 0 as the modulation.
pub fn effective_couplings(
    pair: (ModeIndex, ModeIndex),
    drive: &DriveSpec,
    params: &CircuitParams,
) -> Result<CouplingConstants> {
    let tone = if drive.tones.is_empty() { None } else { Some(0) };
    effective_couplings_for(pair, drive, tone, params, FrequencyChoice::Corrected)
}

pub fn effective_couplings_for(
    pair: (ModeIndex, ModeIndex),
    drive: &DriveSpec,
    tone: Option<usize>,
    params: &CircuitParams,
    choice: FrequencyChoice,
) -> Result<CouplingConstants> {
    params.validate()?;
    let (l, r) = pair;
    if l.line != Line::Left || r.line != Line::Right {
        return Err(Error::InvalidParams(format!("pair must be (left, right), got ({l}, {r})")));
    }
    let eps = match tone {
        None => 0.0,
        Some(m) => drive
            .tones
            .get(m)
            .ok_or_else(|| Error::InvalidParams(format!("drive has no tone {m}")))?
            .amplitude(),
    };
    let w = params.frequency(l, choice)?;
    let u = params.frequency(r, choice)?;
    let k = drive.e0 * phase_factor_sq();
    let n = params.n();
    let (cl, cr) = (params.c_left, params.c_right);
    let xi_rm = -eps * k / (n * (cr * cl * w * u).sqrt());
    Ok(CouplingConstants {
        xi_hp: -2.0 * k / (n * w * (cr * cl).sqrt()),
        xi_rm,
        xi_sq: xi_rm,
        xi_sl: -eps * k / (n * cl * w),
        xi_sr: -eps * k / (n * cr * w),
        g_ij: -k / (n * (cl * cr * w * u).sqrt()),
    })
}

/// Static rotating-frame Hamiltonian [J] for a classified resonance.
pub fn rwa_effective_hamiltonian(
    resonance: &ResonanceSpec,
    drive: &DriveSpec,
    params: &CircuitParams,
) -> Result<QuadraticHamiltonian> {
    if resonance.detuning.abs() > resonance.tolerance {
        return Err(Error::DetuningTooLarge {
            detuning: resonance.detuning,
            tolerance: resonance.tolerance,
        });
    }
    let tone = resonance.drive_tone_index;
    let amplitude = |m: Option<usize>| -> Result<f64> {
        match m {
            None => Ok(0.0),
            Some(m) => drive
                .tones
                .get(m)
                .map(|t| t.amplitude())
                .ok_or_else(|| Error::UnsupportedResonance(format!("drive has no tone {m}"))),
        }
    };

    match resonance.kind {
        ResonanceKind::SingleModeSqueezeL | ResonanceKind::SingleModeSqueezeR => {
            let mode = resonance.mode_left.or(resonance.mode_right).ok_or_else(|| {
                Error::UnsupportedResonance("single-mode resonance without a mode".into())
            })?;
            let f = params.frequency(mode, FrequencyChoice::Corrected)?;
            let xi = -amplitude(tone)? * drive.e0 * phase_factor_sq()
                / (params.n() * params.capacitance(mode.line) * f);
            let mut h = QuadraticHamiltonian::zeros(&[mode]);
            h.pairing[(0, 0)] = C64::new(HBAR * xi, 0.0);
            Ok(h)
        }
        kind => {
            let (l, r) = match (resonance.mode_left, resonance.mode_right) {
                (Some(l), Some(r)) => (l, r),
                _ => {
                    return Err(Error::UnsupportedResonance(format!(
                        "{kind:?} needs a left and a right mode"
                    )))
                }
            };
            let c = effective_couplings_for((l, r), drive, tone, params, FrequencyChoice::Corrected)?;
            let mut h = QuadraticHamiltonian::zeros(&[l, r]);
            let re = |x: f64| C64::new(HBAR * x, 0.0);
            match kind {
                ResonanceKind::DegenerateHopping => h.set_hopping(0, 1, re(c.xi_hp)),
                ResonanceKind::RamanLtoR | ResonanceKind::RamanRtoL => h.set_hopping(0, 1, re(c.xi_rm)),
                ResonanceKind::TwoModeSqueeze => h.set_pairing(0, 1, re(c.xi_sq)),
                ResonanceKind::GeneralLinearDegenerate => {
                    h.set_hopping(0, 1, re(c.xi_hp));
                    h.set_pairing(0, 1, re(c.xi_sq));
                    h.pairing[(0, 0)] = re(c.xi_sl);
                    h.pairing[(1, 1)] = re(c.xi_sr);
                }
                ResonanceKind::PositionPositionNondegenerate => {
                    h.set_hopping(0, 1, re(c.xi_rm));
                    h.set_pairing(0, 1, re(c.xi_rm));
                }
                ResonanceKind::SingleModeSqueezeL | ResonanceKind::SingleModeSqueezeR => {
                    unreachable!("handled above")
                }
            }
            Ok(h)
        }
    }
}

/// ħ[ξ₁ x_i x_j + ξ₂ x_i x_k + ξ₃ x_j x_k] with x = c + c†.
pub fn three_mode_hamiltonian(modes: [ModeIndex; 3], xi: [f64; 3]) -> Result<QuadraticHamiltonian> {
    if modes[0] == modes[1] || modes[0] == modes[2] || modes[1] == modes[2] {
        return Err(Error::InvalidParams("three-mode Hamiltonian needs distinct modes".into()));
    }
    let mut h = QuadraticHamiltonian::zeros(&modes);
    for ((a, b), x) in [(0, 1), (0, 2), (1, 2)].into_iter().zip(xi) {
        let c = C64::new(HBAR * x, 0.0);
        h.set_hopping(a, b, c);
        h.set_pairing(a, b, c);
    }
    Ok(h)
}
