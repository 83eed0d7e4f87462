//! Thermal initial states and the two-mode quantum amplifier.
//!
//! Baths only prepare the initial product thermal state; evolution is
//! closed. Power is reported as work extracted by the drive, positive when
//! quanta flow from the higher-frequency mode to the lower one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitParams, DriveSpec, FrequencyChoice, Line, ModeIndex, HBAR, K_B};
use crate::dynamics::{propagate_static, GaussianState};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hamiltonian::rwa_effective_hamiltonian;
use crate::matching::{classify_resonances, ResonanceKind, ResonanceTolerance};

type C64 = Complex64;

/// Integration tolerance for the per-point propagations.
pub const AMPLIFIER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    /// Kelvin.
    pub temperature: f64,
    pub attached_mode: ModeIndex,
}

/// Bose–Einstein occupation 1/(exp(ħω/k_BT) − 1); 0 at T = 0.
pub fn thermal_occupation(temperature: f64, freq: f64) -> Result<f64> {
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidParams(format!("temperature must be ≥ 0, got {temperature}")));
    }
    if !(freq > 0.0) || !freq.is_finite() {
        return Err(Error::InvalidParams(format!("frequency must be > 0, got {freq}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (HBAR * freq / (K_B * temperature)).exp_m1())
}

/// Extracted power 2ħΩξ·Im(e^{iΩt}⟨ab†⟩) for lab-frame moment ⟨ab†⟩ at `t`.
/// This is −⟨∂_t H_I⟩ for H_I = ħξ(e^{iΩt} ab† + e^{−iΩt} a†b).
pub fn amplifier_power(t: f64, ab_dag: C64, xi: f64, drive_freq: f64) -> f64 {
    let z = C64::from_polar(1.0, drive_freq * t) * ab_dag;
    2.0 * HBAR * drive_freq * xi * z.im
}

/// Duration of one complete population exchange, π/(2|ξ|).
pub fn transfer_window(xi: f64) -> Result<f64> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::NoInteraction);
    }
    Ok(std::f64::consts::FRAC_PI_2 / xi.abs())
}

/// `points` equally spaced times on [0, t_end].
pub fn uniform_grid(t_end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points).map(|k| t_end * k as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    pub times: Vec<f64>,
    /// Extracted power [W].
    pub power: Vec<f64>,
    pub occupation_hot: Vec<f64>,
    pub occupation_cold: Vec<f64>,
    /// Trapezoidal time average over the grid [W].
    pub mean_power: f64,
    pub xi: f64,
    pub drive_freq: f64,
}

/// Trapezoidal mean of `y` over `t`; the single value for one point.
pub fn time_average(t: &[f64], y: &[f64]) -> f64 {
    if t.len() < 2 {
        return y.first().copied().unwrap_or(0.0);
    }
    let area: f64 = t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum();
    area / (t[t.len() - 1] - t[0])
}

pub fn simulate_amplifier(
    hot: &BathSpec,
    cold: &BathSpec,
    drive: &DriveSpec,
    params: &CircuitParams,
    t_grid: &[f64],
) -> Result<PowerTrace> {
    simulate_amplifier_with(Exec::default(), hot, cold, drive, params, t_grid)
}

/// Raman amplifier on the pair (hot mode on the left line, cold on the
/// right), driven at Ω = ω̃ − υ̃. Each grid point is propagated from t = 0
/// independently.
pub fn simulate_amplifier_with(
    exec: Exec,
    hot: &BathSpec,
    cold: &BathSpec,
    drive: &DriveSpec,
    params: &CircuitParams,
    t_grid: &[f64],
) -> Result<PowerTrace> {
    let (l, r) = (hot.attached_mode, cold.attached_mode);
    if l.line != Line::Left || r.line != Line::Right {
        return Err(Error::InvalidParams(format!(
            "amplifier expects the hot bath on a left mode and the cold bath on a right mode, got {l} and {r}"
        )));
    }
    if t_grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidParams("time grid must be ≥ 0".into()));
    }
    let found = classify_resonances(drive, params, &[l, r], ResonanceTolerance::default())?;
    let raman = found
        .iter()
        .find(|s| s.kind == ResonanceKind::RamanLtoR && s.mode_left == Some(l) && s.mode_right == Some(r))
        .ok_or(Error::NoRamanResonance)?;
    let h = rwa_effective_hamiltonian(raman, drive, params)?;
    let xi = h.hopping[(0, 1)].re / HBAR;
    let omega_drive = drive.tones[raman.drive_tone_index.ok_or(Error::NoRamanResonance)?].omega;
    let w = params.frequency(l, FrequencyChoice::Corrected)?;
    let u = params.frequency(r, FrequencyChoice::Corrected)?;
    let initial = GaussianState::thermal(&[
        thermal_occupation(hot.temperature, w)?,
        thermal_occupation(cold.temperature, u)?,
    ])?;

    let samples = exec.try_map(t_grid, |&t| -> Result<(f64, f64, f64)> {
        let s = propagate_static(&h, t, AMPLIFIER_TOL)?;
        let state = initial.evolve(&s)?;
        // interaction-frame ⟨a b†⟩, rotated back to the lab frame
        let frame = state.ladder_moments()[(0, 3)];
        let lab = C64::from_polar(1.0, -(w - u) * t) * frame;
        Ok((amplifier_power(t, lab, xi, omega_drive), state.occupation(0), state.occupation(1)))
    })?;

    let power: Vec<f64> = samples.iter().map(|s| s.0).collect();
    Ok(PowerTrace {
        times: t_grid.to_vec(),
        mean_power: time_average(t_grid, &power),
        power,
        occupation_hot: samples.iter().map(|s| s.1).collect(),
        occupation_cold: samples.iter().map(|s| s.2).collect(),
        xi,
        drive_freq: omega_drive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Tone;
    use crate::matching::{raman_drive, solve_cr_for_degeneracy, DEFAULT_CR_BRACKET};
    use approx::assert_relative_eq;

    fn setup() -> (CircuitParams, DriveSpec) {
        let p0 = CircuitParams::reference(1e-12);
        let c = solve_cr_for_degeneracy(50, &p0, DEFAULT_CR_BRACKET).unwrap().c_right;
        let p = p0.with_c_right(c);
        let omega = raman_drive(30, 50, &p).unwrap();
        let d = DriveSpec::constant(&p).with_tone(Tone::cosine(0.1, omega));
        (p, d)
    }

    fn baths(th: f64, tc: f64) -> (BathSpec, BathSpec) {
        (
            BathSpec { temperature: th, attached_mode: ModeIndex::left(30) },
            BathSpec { temperature: tc, attached_mode: ModeIndex::right(50) },
        )
    }

    #[test]
    fn bose_factor() {
        assert_eq!(thermal_occupation(0.0, 1e10).unwrap(), 0.0);
        let w = 1e10;
        let t = HBAR * w / (K_B * 2f64.ln());
        assert_relative_eq!(thermal_occupation(t, w).unwrap(), 1.0, max_relative = 1e-12);
        // ħω/k_BT = 4.799 at 50 mK and 5 GHz
        let n = thermal_occupation(0.05, 2.0 * std::f64::consts::PI * 5e9).unwrap();
        assert_relative_eq!(n, 8.304_373e-3, max_relative = 1e-6);
        assert!(thermal_occupation(-1.0, w).is_err());
        assert!(thermal_occupation(1.0, 0.0).is_err());
    }

    #[test]
    fn power_formula() {
        assert_eq!(amplifier_power(1.0, C64::new(0.0, 0.0), 2.0, 3.0), 0.0);
        assert_eq!(amplifier_power(1.0, C64::new(0.3, 0.4), 0.0, 3.0), 0.0);
        let p = amplifier_power(0.0, C64::new(0.0, 1.0), 1.0, 1.0);
        assert_relative_eq!(p, 2.0 * HBAR);
    }

    #[test]
    fn hot_left_mode_delivers_power() {
        let (p, d) = setup();
        let (h, c) = baths(0.2, 0.02);
        let probe = simulate_amplifier(&h, &c, &d, &p, &[0.0]).unwrap();
        let grid = uniform_grid(transfer_window(probe.xi).unwrap(), 41);
        let trace = simulate_amplifier(&h, &c, &d, &p, &grid).unwrap();
        assert_eq!(trace.power[0], 0.0);
        assert!(trace.mean_power > 0.0);
        // closed form: ħΩ|ξ| sin(2|ξ|t)(n_h − n_c)
        let nh = trace.occupation_hot[0];
        let nc = trace.occupation_cold[0];
        for (t, pw) in trace.times.iter().zip(&trace.power) {
            let x = trace.xi.abs();
            let expect = HBAR * trace.drive_freq * x * (2.0 * x * t).sin() * (nh - nc);
            assert!((pw - expect).abs() <= 1e-6 * expect.abs().max(1e-30) + 1e-9 * HBAR * trace.drive_freq * x * nh);
        }
        // photon number is conserved by the exchange
        for (a, b) in trace.occupation_hot.iter().zip(&trace.occupation_cold) {
            assert!((a + b - nh - nc).abs() < 1e-8);
        }
    }

    #[test]
    fn requires_raman_matching() {
        let (p, _) = setup();
        let (h, c) = baths(0.2, 0.02);
        let d = DriveSpec::constant(&p).with_tone(Tone::cosine(0.1, 1e9));
        assert_eq!(simulate_amplifier(&h, &c, &d, &p, &[0.0, 1e-9]), Err(Error::NoRamanResonance));
        let swapped = BathSpec { attached_mode: ModeIndex::right(30), ..h };
        assert!(simulate_amplifier(&swapped, &c, &d, &p, &[0.0]).is_err());
    }

    #[test]
    fn averages() {
        assert_relative_eq!(time_average(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]), 1.0);
        assert_eq!(time_average(&[3.0], &[5.0]), 5.0);
        assert_eq!(uniform_grid(1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(transfer_window(0.0), Err(Error::NoInteraction));
    }
}
