//! Phase matching: the degeneracy condition ω̃_j = υ̃_j solved for C_r, the
//! drive frequencies that activate Raman and squeezing terms, and a scan
//! that reports which two-mode couplings survive the RWA under a drive.

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitParams, DriveSpec, FrequencyChoice, Line, ModeIndex};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Default C_r search interval [F]: 1e-3 pF .. 1e3 pF.
pub const DEFAULT_CR_BRACKET: (f64, f64) = (1e-15, 1e-9);

/// Bisection stops once the bracket's relative width drops below this.
const BISECTION_REL_WIDTH: f64 = 1e-13;
const NEWTON_POLISH_STEPS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrSolution {
    pub j: i32,
    /// Solved RHTL capacitance [F].
    pub c_right: f64,
    /// |υ̃_j(C_r) − ω̃_j| / ω̃_j at the returned C_r.
    pub residual: f64,
    pub iterations: u32,
}

/// Solves ω̃_j = υ̃_j for C_r by bisection followed by Newton polish.
///
/// υ̃_j(C_r) scales as C_r^{-1/2}, so the residual is strictly decreasing and
/// the analytic derivative is −υ̃/(2C_r).
pub fn solve_cr_for_degeneracy(
    j: i32,
    params: &CircuitParams,
    bracket: (f64, f64),
) -> Result<CrSolution> {
    params.validate()?;
    if j <= 0 {
        return Err(Error::Domain { j, half: params.half_cells() });
    }
    let target = params.omega_corrected(j)?;
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::NoRootInBracket { lo, hi });
    }
    let residual = |c: f64| -> Result<f64> { Ok(params.with_c_right(c).upsilon_corrected(j)? - target) };

    let mut f_lo = residual(lo)?;
    let mut f_hi = residual(hi)?;
    if f_lo == 0.0 {
        return Ok(CrSolution { j, c_right: lo, residual: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(CrSolution { j, c_right: hi, residual: 0.0, iterations: 0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoRootInBracket { lo, hi });
    }

    let mut iterations = 0;
    while (hi - lo) > BISECTION_REL_WIDTH * hi && iterations < 400 {
        // geometric midpoint: the bracket spans several decades
        let mid = (lo * hi).sqrt();
        let f_mid = residual(mid)?;
        debug_assert!(
            (f_lo >= f_mid && f_mid >= f_hi) || (f_lo <= f_mid && f_mid <= f_hi),
            "degeneracy residual not monotone in C_r"
        );
        iterations += 1;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let _ = f_hi;

    let mut c = 0.5 * (lo + hi);
    for _ in 0..NEWTON_POLISH_STEPS {
        let f = residual(c)?;
        if f == 0.0 {
            break;
        }
        let upsilon = f + target;
        let slope = -upsilon / (2.0 * c);
        let next = c - f / slope;
        iterations += 1;
        if !(next.is_finite() && next > 0.0) {
            break;
        }
        c = next;
    }

    Ok(CrSolution { j, c_right: c, residual: residual(c)?.abs() / target, iterations })
}

/// Drive frequency for Raman coupling, ω̃_l − υ̃_r. Negative values signal
/// the mirrored resonance υ̃ = ω̃ + Ω.
pub fn raman_drive(j_left: i32, j_right: i32, params: &CircuitParams) -> Result<f64> {
    Ok(params.omega_corrected(j_left)? - params.upsilon_corrected(j_right)?)
}

/// Drive frequency for two-mode squeezing, ω̃_l + υ̃_r. Momentum matching
/// additionally needs `j_right == -j_left`.
pub fn squeeze_drive(j_left: i32, j_right: i32, params: &CircuitParams) -> Result<f64> {
    Ok(params.omega_corrected(j_left)? + params.upsilon_corrected(j_right)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResonanceKind {
    /// ω̃ = υ̃, no modulation needed.
    DegenerateHopping,
    /// Ω = ω̃ − υ̃ with ω̃ > υ̃.
    RamanLtoR,
    /// Ω = υ̃ − ω̃ with υ̃ > ω̃.
    RamanRtoL,
    /// Ω = ω̃ + υ̃.
    TwoModeSqueeze,
    /// Ω = 2ω̃.
    SingleModeSqueezeL,
    /// Ω = 2υ̃.
    SingleModeSqueezeR,
    /// Degenerate pair with Ω = 2ω: hopping, two-mode and single-mode squeezing together.
    GeneralLinearDegenerate,
    /// Two tones at ω̃ − υ̃ and ω̃ + υ̃: position-position coupling.
    PositionPositionNondegenerate,
}

impl ResonanceKind {
    pub fn is_raman(self) -> bool {
        matches!(self, ResonanceKind::RamanLtoR | ResonanceKind::RamanRtoL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSpec {
    pub kind: ResonanceKind,
    pub mode_left: Option<ModeIndex>,
    pub mode_right: Option<ModeIndex>,
    /// Tone that activates the resonance; `None` for static hopping.
    pub drive_tone_index: Option<usize>,
    /// Second tone for position-position coupling.
    pub second_tone_index: Option<usize>,
    /// Residual frequency mismatch [rad/s].
    pub detuning: f64,
    /// Absolute tolerance the match was accepted at [rad/s].
    pub tolerance: f64,
    /// Wave-vector condition: k = p for hopping/Raman, p = −k for squeezing.
    pub momentum_matched: bool,
}

/// Frequency tolerance for accepting a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonanceTolerance {
    /// Fixed tolerance [rad/s].
    Absolute(f64),
    /// Fraction of the larger mode frequency involved.
    Relative(f64),
}

impl Default for ResonanceTolerance {
    fn default() -> Self {
        ResonanceTolerance::Relative(1e-6)
    }
}

impl ResonanceTolerance {
    pub fn resolve(self, scale: f64) -> f64 {
        match self {
            ResonanceTolerance::Absolute(t) => t,
            ResonanceTolerance::Relative(r) => r * scale,
        }
    }

    fn validate(self) -> Result<()> {
        let v = match self {
            ResonanceTolerance::Absolute(t) | ResonanceTolerance::Relative(t) => t,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("resonance tolerance must be > 0, got {v}")))
        }
    }
}

/// Lists every coupling whose resonance condition holds within `tol`.
pub fn classify_resonances(
    drive: &DriveSpec,
    params: &CircuitParams,
    mode_set: &[ModeIndex],
    tol: ResonanceTolerance,
) -> Result<Vec<ResonanceSpec>> {
    classify_resonances_with(Exec::default(), drive, params, mode_set, tol)
}

pub fn classify_resonances_with(
    exec: Exec,
    drive: &DriveSpec,
    params: &CircuitParams,
    mode_set: &[ModeIndex],
    tol: ResonanceTolerance,
) -> Result<Vec<ResonanceSpec>> {
    params.validate()?;
    tol.validate()?;
    let with_freq = |line: Line| -> Result<Vec<(ModeIndex, f64)>> {
        mode_set
            .iter()
            .filter(|m| m.line == line)
            .map(|&m| Ok((m, params.frequency(m, FrequencyChoice::Corrected)?)))
            .collect()
    };
    let lefts = with_freq(Line::Left)?;
    let rights = with_freq(Line::Right)?;

    let pairs: Vec<((ModeIndex, f64), (ModeIndex, f64))> = lefts
        .iter()
        .flat_map(|&l| rights.iter().map(move |&r| (l, r)))
        .collect();
    let per_pair = exec.map(&pairs, |&(l, r)| classify_pair(drive, l, r, tol));

    let mut out: Vec<ResonanceSpec> = per_pair.into_iter().flatten().collect();
    for &(m, f) in lefts.iter().chain(rights.iter()) {
        let tolerance = tol.resolve(f);
        let kind = match m.line {
            Line::Left => ResonanceKind::SingleModeSqueezeL,
            Line::Right => ResonanceKind::SingleModeSqueezeR,
        };
        for (idx, tone) in drive.tones.iter().enumerate() {
            let detuning = tone.omega - 2.0 * f;
            if detuning.abs() <= tolerance {
                let (mode_left, mode_right) = match m.line {
                    Line::Left => (Some(m), None),
                    Line::Right => (None, Some(m)),
                };
                out.push(ResonanceSpec {
                    kind,
                    mode_left,
                    mode_right,
                    drive_tone_index: Some(idx),
                    second_tone_index: None,
                    detuning,
                    tolerance,
                    momentum_matched: true,
                });
            }
        }
    }
    Ok(out)
}

fn classify_pair(
    drive: &DriveSpec,
    (l, w): (ModeIndex, f64),
    (r, u): (ModeIndex, f64),
    tol: ResonanceTolerance,
) -> Vec<ResonanceSpec> {
    let tolerance = tol.resolve(w.max(u));
    let spec = |kind, tone: Option<usize>, detuning: f64, momentum_matched| ResonanceSpec {
        kind,
        mode_left: Some(l),
        mode_right: Some(r),
        drive_tone_index: tone,
        second_tone_index: None,
        detuning,
        tolerance,
        momentum_matched,
    };

    let mut found = Vec::new();
    if l.j == r.j && (w - u).abs() <= tolerance {
        found.push(spec(ResonanceKind::DegenerateHopping, None, w - u, true));
    }
    for (idx, tone) in drive.tones.iter().enumerate() {
        let raman = tone.omega - (w - u).abs();
        if raman.abs() <= tolerance {
            let kind = if w >= u { ResonanceKind::RamanLtoR } else { ResonanceKind::RamanRtoL };
            found.push(spec(kind, Some(idx), raman, l.j == r.j));
        }
        let squeeze = tone.omega - (w + u);
        if squeeze.abs() <= tolerance {
            found.push(spec(ResonanceKind::TwoModeSqueeze, Some(idx), squeeze, l.j == -r.j));
        }
    }

    let mut combined = Vec::new();
    for a in found.iter().filter(|s| s.kind.is_raman()) {
        for b in found.iter().filter(|s| s.kind == ResonanceKind::TwoModeSqueeze) {
            if a.drive_tone_index != b.drive_tone_index {
                let mut s = spec(
                    ResonanceKind::PositionPositionNondegenerate,
                    a.drive_tone_index,
                    larger(a.detuning, b.detuning),
                    a.momentum_matched && b.momentum_matched,
                );
                s.second_tone_index = b.drive_tone_index;
                combined.push(s);
            }
        }
    }
    if let Some(h) = found.iter().find(|s| s.kind == ResonanceKind::DegenerateHopping) {
        for b in found.iter().filter(|s| s.kind == ResonanceKind::TwoModeSqueeze) {
            combined.push(spec(
                ResonanceKind::GeneralLinearDegenerate,
                b.drive_tone_index,
                larger(h.detuning, b.detuning),
                h.momentum_matched,
            ));
        }
    }
    found.extend(combined);
    found
}

fn larger(a: f64, b: f64) -> f64 {
    if a.abs() >= b.abs() {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Tone;
    use approx::assert_relative_eq;

    fn solved(j: i32) -> CircuitParams {
        let p = CircuitParams::reference(1e-12);
        let sol = solve_cr_for_degeneracy(j, &p, DEFAULT_CR_BRACKET).unwrap();
        p.with_c_right(sol.c_right)
    }

    /// υ̃_j ∝ C_r^{-1/2} gives C_r = (υ̃_j(1 F)/ω̃_j)² in closed form.
    fn closed_form_cr(j: i32, p: &CircuitParams) -> f64 {
        let unit = p.with_c_right(1.0).upsilon_corrected(j).unwrap();
        (unit / p.omega_corrected(j).unwrap()).powi(2)
    }

    #[test]
    fn published_capacitances() {
        let p = CircuitParams::reference(1e-12);
        for (j, pf) in [(30, 0.27), (50, 1.60), (100, 6.39)] {
            let sol = solve_cr_for_degeneracy(j, &p, DEFAULT_CR_BRACKET).unwrap();
            let rounded = (sol.c_right * 1e12 * 100.0).round() / 100.0;
            assert!((rounded - pf).abs() <= 0.005, "j={j}: {} pF", sol.c_right * 1e12);
            assert!(sol.residual <= 1e-12);
            assert_relative_eq!(sol.c_right, closed_form_cr(j, &p), max_relative = 1e-12);
        }
    }

    #[test]
    fn wider_bracket_gives_same_root() {
        let p = CircuitParams::reference(1e-12);
        let a = solve_cr_for_degeneracy(50, &p, (1e-13, 1e-11)).unwrap();
        let b = solve_cr_for_degeneracy(50, &p, (1e-14, 1e-10)).unwrap();
        assert_relative_eq!(a.c_right, b.c_right, max_relative = 1e-12);
    }

    #[test]
    fn bracket_without_root() {
        let p = CircuitParams::reference(1e-12);
        assert!(matches!(
            solve_cr_for_degeneracy(50, &p, (1e-11, 1e-10)),
            Err(Error::NoRootInBracket { .. })
        ));
        assert!(matches!(
            solve_cr_for_degeneracy(0, &p, DEFAULT_CR_BRACKET),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            solve_cr_for_degeneracy(101, &p, DEFAULT_CR_BRACKET),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn drive_frequencies() {
        let p = solved(50);
        assert!(raman_drive(50, 50, &p).unwrap().abs() <= 1e-12 * p.omega_corrected(50).unwrap());
        // ω̃ falls with j on the LHTL, so ω̃_100 < ω̃_50 = υ̃_50.
        assert!(raman_drive(100, 50, &p).unwrap() < 0.0);
        assert!(raman_drive(30, 50, &p).unwrap() > 0.0);
        assert_relative_eq!(
            raman_drive(30, 50, &p).unwrap(),
            p.omega_corrected(30).unwrap() - p.upsilon_corrected(50).unwrap()
        );
        let sq = squeeze_drive(50, -50, &p).unwrap();
        assert!(sq > 0.0);
        assert_relative_eq!(sq, 2.0 * p.omega_corrected(50).unwrap(), max_relative = 1e-12);
    }

    fn positive_modes(lo: i32, hi: i32) -> Vec<ModeIndex> {
        (lo..=hi).flat_map(|j| [ModeIndex::left(j), ModeIndex::right(j)]).collect()
    }

    #[test]
    fn static_drive_finds_only_the_degenerate_pair() {
        let p = solved(50);
        let drive = DriveSpec::constant(&p);
        let modes = positive_modes(1, 100);
        let found =
            classify_resonances(&drive, &p, &modes, ResonanceTolerance::default()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, ResonanceKind::DegenerateHopping);
        assert_eq!(found[0].mode_left, Some(ModeIndex::left(50)));
        assert_eq!(found[0].mode_right, Some(ModeIndex::right(50)));
        assert!(found[0].detuning.abs() <= found[0].tolerance);
    }

    #[test]
    fn squeeze_tone_pairs_opposite_wave_vectors() {
        let p = solved(50);
        let omega = squeeze_drive(50, -50, &p).unwrap();
        let drive = DriveSpec::constant(&p).with_tone(Tone::cosine(0.1, omega));
        let modes = vec![ModeIndex::left(50), ModeIndex::right(-50), ModeIndex::right(40)];
        let found =
            classify_resonances(&drive, &p, &modes, ResonanceTolerance::default()).unwrap();
        let sq = found
            .iter()
            .find(|s| s.kind == ResonanceKind::TwoModeSqueeze)
            .expect("squeeze resonance");
        assert_eq!(sq.mode_left, Some(ModeIndex::left(50)));
        assert_eq!(sq.mode_right, Some(ModeIndex::right(-50)));
        assert!(sq.momentum_matched);
        assert_eq!(sq.drive_tone_index, Some(0));
        // at degeneracy Ω = 2ω̃ also drives single-mode squeezing
        assert!(found.iter().any(|s| s.kind == ResonanceKind::SingleModeSqueezeL));
    }

    #[test]
    fn two_tones_enable_position_position() {
        let p = solved(50);
        let (jl, jr) = (30, 50);
        let drive = DriveSpec::constant(&p)
            .with_tone(Tone::cosine(2.0, raman_drive(jl, jr, &p).unwrap()))
            .with_tone(Tone::cosine(2.0, squeeze_drive(jl, jr, &p).unwrap()));
        let modes = vec![ModeIndex::left(jl), ModeIndex::right(jr)];
        let found =
            classify_resonances(&drive, &p, &modes, ResonanceTolerance::default()).unwrap();
        let kinds: Vec<_> = found.iter().map(|s| s.kind).collect();
        assert!(kinds.contains(&ResonanceKind::RamanLtoR));
        assert!(kinds.contains(&ResonanceKind::TwoModeSqueeze));
        let pp = found
            .iter()
            .find(|s| s.kind == ResonanceKind::PositionPositionNondegenerate)
            .unwrap();
        assert_eq!(pp.drive_tone_index, Some(0));
        assert_eq!(pp.second_tone_index, Some(1));
    }

    #[test]
    fn mirrored_raman_is_labelled() {
        let p = solved(50);
        let omega = raman_drive(100, 50, &p).unwrap().abs();
        let drive = DriveSpec::constant(&p).with_tone(Tone::cosine(0.1, omega));
        let modes = vec![ModeIndex::left(100), ModeIndex::right(50)];
        let found =
            classify_resonances(&drive, &p, &modes, ResonanceTolerance::default()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, ResonanceKind::RamanRtoL);
        assert!(!found[0].momentum_matched);
    }

    #[test]
    fn classifier_rejects_bad_input() {
        let p = solved(50);
        let drive = DriveSpec::constant(&p);
        assert!(classify_resonances(&drive, &p, &[], ResonanceTolerance::Absolute(0.0)).is_err());
        assert!(classify_resonances(
            &drive,
            &p,
            &[ModeIndex::left(0)],
            ResonanceTolerance::default()
        )
        .is_err());
        assert!(classify_resonances(&drive, &p, &[], ResonanceTolerance::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sequential_and_parallel_scans_agree() {
        let p = solved(30);
        let drive = DriveSpec::constant(&p)
            .with_tone(Tone::cosine(0.1, squeeze_drive(30, -30, &p).unwrap()));
        let modes: Vec<ModeIndex> = p
            .mode_numbers()
            .into_iter()
            .flat_map(|j| [ModeIndex::left(j), ModeIndex::right(j)])
            .collect();
        let tol = ResonanceTolerance::default();
        let a = classify_resonances_with(Exec::Sequential, &drive, &p, &modes, tol).unwrap();
        let b = classify_resonances_with(Exec::Parallel, &drive, &p, &modes, tol).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }
}
