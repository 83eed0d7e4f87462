//! Circuit constants, dispersion relations and the Josephson drive.
//!
//! Both lines are discrete LC lattices of `n_cells` cells. The left-handed
//! line (LHTL) has a dispersion that falls with |j|, the right-handed line
//! (RHTL) one that rises. All quantities are SI; `k_j Δx = 2πj/N` so results
//! never depend on `dx` except through [`CircuitParams::wave_vector`].

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant [J s] (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge [C] (exact).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant [J/K] (exact).
pub const K_B: f64 = 1.380_649e-23;
/// Magnetic flux quantum φ₀ = πħ/e [Wb].
pub const PHI_0: f64 = PI * HBAR / E_CHARGE;

/// `(2π/φ₀)²` [1/Wb²].
pub fn phase_factor_sq() -> f64 {
    let f = 2.0 * PI / PHI_0;
    f * f
}

/// How the SQUID critical current maps to the Josephson energy E₀.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JosephsonConvention {
    /// E₀ = ħ I_c / 2e = I_c φ₀ / 2π. Reproduces the published C_r values.
    #[default]
    Reduced,
    /// E₀ = I_c φ₀.
    FluxQuantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Line {
    Left,
    Right,
}

/// Signed mode number on one of the two lines. Positive `j` propagates to the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub line: Line,
    pub j: i32,
}

impl ModeIndex {
    pub fn left(j: i32) -> Self {
        ModeIndex { line: Line::Left, j }
    }

    pub fn right(j: i32) -> Self {
        ModeIndex { line: Line::Right, j }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.line {
            Line::Left => 'L',
            Line::Right => 'R',
        };
        write!(f, "{tag}:{}", self.j)
    }
}

/// Whether mode frequencies include the static SQUID shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyChoice {
    #[default]
    Corrected,
    Bare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    /// LHTL capacitance [F].
    pub c_left: f64,
    /// LHTL inductance [H].
    pub l_left: f64,
    /// RHTL capacitance [F].
    pub c_right: f64,
    /// RHTL inductance [H].
    pub l_right: f64,
    /// Cells per line.
    pub n_cells: u32,
    /// Unit-cell length [m].
    pub dx: f64,
    /// SQUID critical current [A].
    pub i_crit: f64,
    #[serde(default)]
    pub josephson: JosephsonConvention,
}

impl CircuitParams {
    /// The two-line set used for the phase-matching figure (C_l = 0.4 pF,
    /// L_l = L_r = 60 pH, I_c = 1.25 µA, N = 200) with the given C_r.
    pub fn reference(c_right: f64) -> Self {
        CircuitParams {
            c_left: 0.4e-12,
            l_left: 60e-12,
            c_right,
            l_right: 60e-12,
            n_cells: 200,
            dx: 1.0,
            i_crit: 1.25e-6,
            josephson: JosephsonConvention::Reduced,
        }
    }

    pub fn with_c_right(mut self, c_right: f64) -> Self {
        self.c_right = c_right;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_left", self.c_left),
            ("l_left", self.l_left),
            ("c_right", self.c_right),
            ("l_right", self.l_right),
            ("dx", self.dx),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.i_crit.is_finite() && self.i_crit >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "i_crit must be >= 0, got {}",
                self.i_crit
            )));
        }
        if self.n_cells < 2 || !self.n_cells.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "n_cells must be even and >= 2, got {}",
                self.n_cells
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        f64::from(self.n_cells)
    }

    /// Largest admissible |j|, i.e. N/2.
    pub fn half_cells(&self) -> i32 {
        (self.n_cells / 2) as i32
    }

    /// Mean Josephson energy E₀ [J].
    pub fn josephson_energy(&self) -> f64 {
        match self.josephson {
            JosephsonConvention::Reduced => HBAR * self.i_crit / (2.0 * E_CHARGE),
            JosephsonConvention::FluxQuantum => self.i_crit * PHI_0,
        }
    }

    /// E₀ (2π/φ₀)², the inverse Josephson inductance [1/H].
    pub fn coupling_scale(&self) -> f64 {
        self.josephson_energy() * phase_factor_sq()
    }

    /// All admissible mode numbers ±1..=±N/2 in ascending order.
    pub fn mode_numbers(&self) -> Vec<i32> {
        let h = self.half_cells();
        (-h..=h).filter(|&j| j != 0).collect()
    }

    /// `|sin(k_j Δx / 2)|` after checking the Brillouin-zone bounds.
    pub fn half_sin(&self, j: i32) -> Result<f64> {
        let half = self.half_cells();
        if j == 0 || j.abs() > half {
            return Err(Error::Domain { j, half });
        }
        Ok((PI * f64::from(j) / self.n()).sin().abs())
    }

    /// k_j = 2πj/(NΔx) [rad/m]; identical for both lines.
    pub fn wave_vector(&self, j: i32) -> Result<f64> {
        self.half_sin(j)?;
        Ok(2.0 * PI * f64::from(j) / (self.n() * self.dx))
    }

    /// Bare LHTL frequency ω_j [rad/s].
    pub fn omega_bare(&self, j: i32) -> Result<f64> {
        let s = self.half_sin(j)?;
        Ok(1.0 / (2.0 * (self.c_left * self.l_left).sqrt() * s))
    }

    /// Bare RHTL frequency υ_j [rad/s].
    pub fn upsilon_bare(&self, j: i32) -> Result<f64> {
        let s = self.half_sin(j)?;
        Ok(2.0 * s / (self.c_right * self.l_right).sqrt())
    }

    /// Bare LHTL eigenenergy ε_j = 4ħω_j sin²(k_jΔx/2) [J].
    pub fn epsilon_bare(&self, j: i32) -> Result<f64> {
        let s = self.half_sin(j)?;
        Ok(2.0 * HBAR * s / (self.c_left * self.l_left).sqrt())
    }

    /// ω̃_j − ω_j.
    pub fn omega_shift(&self, j: i32) -> Result<f64> {
        let s = self.half_sin(j)?;
        let w = self.omega_bare(j)?;
        Ok(self.coupling_scale() / (4.0 * self.n() * self.c_left * w * s * s))
    }

    /// υ̃_j − υ_j.
    pub fn upsilon_shift(&self, j: i32) -> Result<f64> {
        let u = self.upsilon_bare(j)?;
        Ok(self.coupling_scale() / (self.n() * self.c_right * u))
    }

    /// Corrected LHTL frequency ω̃_j [rad/s].
    pub fn omega_corrected(&self, j: i32) -> Result<f64> {
        Ok(self.omega_bare(j)? + self.omega_shift(j)?)
    }

    /// Corrected RHTL frequency υ̃_j [rad/s].
    pub fn upsilon_corrected(&self, j: i32) -> Result<f64> {
        Ok(self.upsilon_bare(j)? + self.upsilon_shift(j)?)
    }

    /// Shifted LHTL eigenenergy ε̃_j [J].
    pub fn epsilon_corrected(&self, j: i32) -> Result<f64> {
        let w = self.omega_bare(j)?;
        Ok(self.epsilon_bare(j)? + HBAR * self.coupling_scale() / (self.n() * self.c_left * w))
    }

    /// Frequency of any mode on either line.
    pub fn frequency(&self, mode: ModeIndex, choice: FrequencyChoice) -> Result<f64> {
        match (mode.line, choice) {
            (Line::Left, FrequencyChoice::Corrected) => self.omega_corrected(mode.j),
            (Line::Left, FrequencyChoice::Bare) => self.omega_bare(mode.j),
            (Line::Right, FrequencyChoice::Corrected) => self.upsilon_corrected(mode.j),
            (Line::Right, FrequencyChoice::Bare) => self.upsilon_bare(mode.j),
        }
    }

    /// Capacitance of the line a mode lives on.
    pub fn capacitance(&self, line: Line) -> f64 {
        match line {
            Line::Left => self.c_left,
            Line::Right => self.c_right,
        }
    }

    /// Factor relating the field-expansion ladder operator to a canonical
    /// one: `a = ã / norm`. LHTL operators obey [a, a†] = 1/(4 sin²), RHTL
    /// operators are already canonical.
    pub fn ladder_norm(&self, mode: ModeIndex) -> Result<f64> {
        let s = self.half_sin(mode.j)?;
        Ok(match mode.line {
            Line::Left => 2.0 * s,
            Line::Right => 1.0,
        })
    }
}

/// One drive component `ε sin(Ωt) + κ cos(Ωt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub kappa: f64,
    /// Angular frequency Ω [rad/s].
    pub omega: f64,
}

impl Tone {
    /// Single-tone modulation E₀[1 + ε cos Ωt].
    pub fn cosine(amplitude: f64, omega: f64) -> Self {
        Tone { eps: 0.0, kappa: amplitude, omega }
    }

    /// Modulation depth √(ε² + κ²).
    pub fn amplitude(&self) -> f64 {
        self.eps.hypot(self.kappa)
    }

    /// Complex weight of `e^{+iΩt}` in `ε sin Ωt + κ cos Ωt`; the `e^{-iΩt}`
    /// weight is its conjugate.
    pub fn positive_weight(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(0.5 * self.kappa, -0.5 * self.eps)
    }
}

/// Josephson energy modulation E(t) = E₀[1 + Σ_m (ε_m sin Ω_m t + κ_m cos Ω_m t)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    /// E₀ [J].
    pub e0: f64,
    #[serde(default)]
    pub tones: Vec<Tone>,
}

impl DriveSpec {
    /// Unmodulated drive at the circuit's E₀.
    pub fn constant(params: &CircuitParams) -> Self {
        DriveSpec { e0: params.josephson_energy(), tones: Vec::new() }
    }

    pub fn with_tone(mut self, tone: Tone) -> Self {
        self.tones.push(tone);
        self
    }

    /// E(t)/E₀.
    pub fn modulation(&self, t: f64) -> f64 {
        1.0 + self
            .tones
            .iter()
            .map(|tn| {
                let (s, c) = (tn.omega * t).sin_cos();
                tn.eps * s + tn.kappa * c
            })
            .sum::<f64>()
    }

    /// E(t) [J].
    pub fn energy(&self, t: f64) -> f64 {
        self.e0 * self.modulation(t)
    }
}

/// Interaction prefactor χ(t) = ħE(t)/(2N)·(2π/φ₀)².
pub fn chi(t: f64, drive: &DriveSpec, params: &CircuitParams) -> f64 {
    chi_from_energy(drive.energy(t), params)
}

/// χ for a given instantaneous Josephson energy.
pub fn chi_from_energy(energy: f64, params: &CircuitParams) -> f64 {
    HBAR * energy / (2.0 * params.n()) * phase_factor_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig2() -> CircuitParams {
        CircuitParams::reference(1.60e-12)
    }

    #[test]
    fn flux_quantum_value() {
        assert_relative_eq!(PHI_0, 2.067_833_848e-15, max_relative = 1e-9);
    }

    #[test]
    fn wave_vector_examples() {
        let mut p = fig2();
        p.dx = 1e-3;
        assert_relative_eq!(p.wave_vector(100).unwrap(), PI / 1e-3, max_relative = 1e-15);
        assert_relative_eq!(p.wave_vector(1).unwrap(), 31.415_926_535_897_93, max_relative = 1e-12);
        assert_eq!(p.wave_vector(-5).unwrap(), -p.wave_vector(5).unwrap());
    }

    #[test]
    fn out_of_zone_modes_are_rejected() {
        let p = fig2();
        for j in [0, 101, -101] {
            assert_eq!(p.wave_vector(j), Err(Error::Domain { j, half: 100 }));
            assert!(p.omega_bare(j).is_err());
            assert!(p.upsilon_corrected(j).is_err());
        }
    }

    #[test]
    fn bare_dispersion_examples() {
        let p = fig2();
        let edge = 1.0 / (2.0 * (p.c_left * p.l_left).sqrt());
        assert_relative_eq!(p.omega_bare(100).unwrap(), edge, max_relative = 1e-15);
        assert_relative_eq!(p.omega_bare(100).unwrap(), 1.0206e11, max_relative = 1e-4);
        assert_eq!(p.omega_bare(-37).unwrap(), p.omega_bare(37).unwrap());

        assert_relative_eq!(
            p.upsilon_bare(100).unwrap(),
            2.0 / (p.c_right * p.l_right).sqrt(),
            max_relative = 1e-15
        );
        // 2 sin(π/4)/√(9.6e-23)
        assert_relative_eq!(p.upsilon_bare(50).unwrap(), 1.443_375_672_974e11, max_relative = 1e-10);
        for j in 1..=100 {
            let s = (PI * f64::from(j) / 200.0).sin();
            assert_relative_eq!(
                p.upsilon_bare(j).unwrap() * (p.c_right * p.l_right).sqrt() / 2.0,
                s,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn bare_energy_identity_and_edge() {
        let p = fig2();
        for j in 1..=100 {
            let s = p.half_sin(j).unwrap();
            assert_relative_eq!(
                p.epsilon_bare(j).unwrap(),
                4.0 * HBAR * p.omega_bare(j).unwrap() * s * s,
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(
            p.epsilon_bare(100).unwrap(),
            2.0 * HBAR / (p.c_left * p.l_left).sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn zero_critical_current_removes_shifts() {
        let mut p = fig2();
        p.i_crit = 0.0;
        for j in [1, 17, 100] {
            assert_eq!(p.omega_corrected(j).unwrap(), p.omega_bare(j).unwrap());
            assert_eq!(p.upsilon_corrected(j).unwrap(), p.upsilon_bare(j).unwrap());
            assert_eq!(p.epsilon_corrected(j).unwrap(), p.epsilon_bare(j).unwrap());
        }
    }

    #[test]
    fn corrected_energy_matches_corrected_frequency() {
        let p = fig2();
        for j in 1..=100 {
            let s = p.half_sin(j).unwrap();
            assert_relative_eq!(
                p.epsilon_corrected(j).unwrap(),
                4.0 * HBAR * p.omega_corrected(j).unwrap() * s * s,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn corrections_decrease_with_j() {
        let p = fig2();
        assert!(p.omega_shift(1).unwrap() > p.omega_shift(100).unwrap());
        assert!(p.upsilon_shift(1).unwrap() > p.upsilon_shift(100).unwrap());
        let eps: Vec<f64> = (1..=100).map(|j| p.epsilon_corrected(j).unwrap() / HBAR).collect();
        assert!(eps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn drive_evaluation() {
        let p = fig2();
        let d = DriveSpec::constant(&p);
        assert_eq!(d.energy(1.234e-9), d.e0);

        let d1 = DriveSpec::constant(&p).with_tone(Tone::cosine(0.3, 2e10));
        assert_relative_eq!(d1.energy(0.0), d.e0 * 1.3, max_relative = 1e-15);
        let t = 0.77e-9;
        assert_relative_eq!(
            d1.energy(t),
            d.e0 * (1.0 + 0.3 * (2e10 * t).cos()),
            max_relative = 1e-15
        );

        let d2 = DriveSpec::constant(&p)
            .with_tone(Tone::cosine(2.0, 1e10))
            .with_tone(Tone::cosine(2.0, 3e10));
        assert_relative_eq!(d2.energy(0.0), 5.0 * d.e0, max_relative = 1e-15);
    }

    #[test]
    fn chi_examples() {
        let p = fig2();
        let mut d = DriveSpec::constant(&p);
        let expected = HBAR * d.e0 / 400.0 * phase_factor_sq();
        assert_relative_eq!(chi(0.0, &d, &p), expected, max_relative = 1e-15);
        d.e0 *= 2.0;
        assert_relative_eq!(chi(0.0, &d, &p), 2.0 * expected, max_relative = 1e-15);
        d.e0 = 0.0;
        assert_eq!(chi(0.0, &d, &p), 0.0);
    }

    #[test]
    fn josephson_conventions_differ_by_two_pi() {
        let mut p = fig2();
        let reduced = p.josephson_energy();
        p.josephson = JosephsonConvention::FluxQuantum;
        assert_relative_eq!(p.josephson_energy(), 2.0 * PI * reduced, max_relative = 1e-14);
    }

    #[test]
    fn validation() {
        assert!(fig2().validate().is_ok());
        let mut p = fig2();
        p.n_cells = 3;
        assert!(p.validate().is_err());
        let mut p = fig2();
        p.c_left = 0.0;
        assert!(p.validate().is_err());
        let mut p = fig2();
        p.i_crit = -1.0;
        assert!(p.validate().is_err());
        let mut p = fig2();
        p.n_cells = 2;
        assert!(p.validate().is_ok());
        assert_eq!(p.mode_numbers(), vec![-1, 1]);
    }
}
