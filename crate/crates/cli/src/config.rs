//! Run configuration: the TOML schema and its one-time resolution to SI.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ctl_sim::circuit::{CircuitParams, DriveSpec, JosephsonConvention, Line, ModeIndex, Tone};
use ctl_sim::correlations::InitialState;
use ctl_sim::dynamics::GaussianState;
use ctl_sim::matching::{raman_drive, solve_cr_for_degeneracy, squeeze_drive, DEFAULT_CR_BRACKET};
use ctl_sim::thermo::{thermal_occupation, BathSpec};
use ctl_sim::{FrequencyChoice, ResonanceKind, ResonanceTolerance};
use serde::{Deserialize, Serialize};

use crate::units::{Dim, Quantity};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    circuit: RawCircuit,
    #[serde(default)]
    drive: RawDrive,
    #[serde(rename = "match")]
    matching: Option<RawMatch>,
    classify: Option<RawClassify>,
    evolve: Option<RawEvolve>,
    g2: Option<RawG2>,
    hom: Option<RawHom>,
    power: Option<RawPower>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    c_left: Quantity,
    l_left: Quantity,
    c_right: Option<Quantity>,
    /// Solve C_r so that ω̃_j = υ̃_j for this j instead of giving it.
    degenerate_j: Option<i32>,
    l_right: Quantity,
    n_cells: u32,
    #[serde(default = "one_metre")]
    dx: Quantity,
    i_crit: Quantity,
    #[serde(default)]
    josephson: JosephsonConvention,
}

fn one_metre() -> Quantity {
    Quantity::Number(1.0)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    e0: Option<Quantity>,
    #[serde(default)]
    tones: Vec<RawTone>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTone {
    #[serde(default)]
    eps: f64,
    #[serde(default)]
    kappa: f64,
    omega: Option<Quantity>,
    /// Place the tone exactly on a Raman or squeeze resonance.
    lock: Option<RawLock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLock {
    kind: LockKind,
    left: i32,
    right: i32,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LockKind {
    Raman,
    Squeeze,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatch {
    #[serde(default)]
    j: Vec<i32>,
    bracket: Option<[Quantity; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RawTolerance {
    Relative(f64),
    Absolute(Quantity),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawModeSet {
    Keyword(String),
    List(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClassify {
    modes: RawModeSet,
    tolerance: Option<RawTolerance>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimes {
    t_max: Option<Quantity>,
    /// End time in units of 1/|ξ|.
    xi_t_max: Option<f64>,
    points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvolve {
    left: String,
    right: String,
    #[serde(default)]
    picture: Picture,
    resonance: Option<ResonanceKind>,
    tolerance: Option<RawTolerance>,
    occupations: Option<[f64; 2]>,
    temperatures: Option<[Quantity; 2]>,
    times: RawTimes,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Keyword(String),
    Table(RawInitialTable),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitialTable {
    fock: Option<[u32; 2]>,
    thermal: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawG2 {
    initial: RawInitial,
    resonance: Option<ResonanceKind>,
    xi: Option<Quantity>,
    left: Option<String>,
    right: Option<String>,
    #[serde(default = "bare")]
    prefactor_frequencies: FrequencyChoice,
    #[serde(default)]
    scan: Scan,
    times: RawTimes,
}

fn bare() -> FrequencyChoice {
    FrequencyChoice::Bare
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHom {
    left: String,
    right: String,
    xi: Option<Quantity>,
    #[serde(default = "default_points")]
    points: usize,
}

fn default_points() -> usize {
    201
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    temperature: Quantity,
    mode: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPower {
    hot: RawBath,
    cold: RawBath,
    /// Trace length in transfer windows π/(2|ξ|).
    #[serde(default = "one")]
    windows: f64,
    #[serde(default = "default_points")]
    points: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    /// Static rotating-wave Hamiltonian of the classified resonance.
    #[default]
    Rwa,
    /// Full driven lab-frame Hamiltonian.
    Lab,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scan {
    /// t1 = t2 = t.
    #[default]
    Diagonal,
    /// Full points × points grid.
    Grid,
}

/// End of a time axis; `XiUnits` is resolved once ξ is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeEnd {
    Seconds(f64),
    XiUnits(f64),
}

impl TimeEnd {
    pub fn seconds(self, xi: f64) -> Result<f64> {
        match self {
            TimeEnd::Seconds(t) => Ok(t),
            TimeEnd::XiUnits(x) if xi != 0.0 => Ok(x / xi.abs()),
            TimeEnd::XiUnits(_) => bail!("xi_t_max needs a nonzero coupling"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeAxis {
    pub end: TimeEnd,
    pub points: usize,
}

/// Resonance tolerance; `None` accepts exact matches only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance(pub Option<ResonanceTolerance>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchConfig {
    pub j: Vec<i32>,
    /// [F]
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyConfig {
    pub modes: Vec<ModeIndex>,
    pub tolerance: Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveConfig {
    pub left: ModeIndex,
    pub right: ModeIndex,
    pub picture: Picture,
    pub resonance: Option<ResonanceKind>,
    pub tolerance: Tolerance,
    pub occupations: [f64; 2],
    pub times: TimeAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Config {
    pub initial: InitialState,
    pub resonance: Option<ResonanceKind>,
    /// [rad/s]
    pub xi: Option<f64>,
    pub pair: Option<(ModeIndex, ModeIndex)>,
    pub prefactor_frequencies: FrequencyChoice,
    pub scan: Scan,
    pub times: TimeAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomConfig {
    pub left: ModeIndex,
    pub right: ModeIndex,
    /// [rad/s]
    pub xi: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerConfig {
    pub hot: BathSpec,
    pub cold: BathSpec,
    pub windows: f64,
    pub points: usize,
}

/// Fully resolved configuration, every dimensionful value in SI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub circuit: CircuitParams,
    /// j for which C_r was solved, if it was.
    pub degenerate_j: Option<i32>,
    pub drive: DriveSpec,
    #[serde(rename = "match")]
    pub matching: Option<MatchConfig>,
    pub classify: Option<ClassifyConfig>,
    pub evolve: Option<EvolveConfig>,
    pub g2: Option<G2Config>,
    pub hom: Option<HomConfig>,
    pub power: Option<PowerConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        resolve(raw)
    }
}

/// Parses "L:50" / "R:-40".
pub fn parse_mode(text: &str) -> Result<ModeIndex> {
    let (line, j) = text
        .trim()
        .split_once(':')
        .ok_or_else(|| anyhow!("mode {text:?} must look like L:50 or R:-40"))?;
    let line = match line.trim() {
        "L" | "l" => Line::Left,
        "R" | "r" => Line::Right,
        other => bail!("unknown line {other:?} in mode {text:?}; use L or R"),
    };
    let j: i32 = j.trim().parse().with_context(|| format!("mode number in {text:?}"))?;
    Ok(ModeIndex { line, j })
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let c = &raw.circuit;
    let mut circuit = CircuitParams {
        c_left: c.c_left.si(Dim::Capacitance).context("circuit.c_left")?,
        l_left: c.l_left.si(Dim::Inductance).context("circuit.l_left")?,
        c_right: f64::NAN,
        l_right: c.l_right.si(Dim::Inductance).context("circuit.l_right")?,
        n_cells: c.n_cells,
        dx: c.dx.si(Dim::Length).context("circuit.dx")?,
        i_crit: c.i_crit.si(Dim::Current).context("circuit.i_crit")?,
        josephson: c.josephson,
    };
    match (&c.c_right, c.degenerate_j) {
        (Some(q), None) => circuit.c_right = q.si(Dim::Capacitance).context("circuit.c_right")?,
        (None, Some(j)) => {
            // C_r does not enter ω̃_j, so any placeholder works for the solve
            let seed = circuit.with_c_right(1e-12);
            circuit.c_right = solve_cr_for_degeneracy(j, &seed, DEFAULT_CR_BRACKET)
                .with_context(|| format!("solving C_r for circuit.degenerate_j = {j}"))?
                .c_right;
        }
        _ => bail!("circuit needs exactly one of c_right or degenerate_j"),
    }
    circuit.validate()?;

    let e0 = match &raw.drive.e0 {
        Some(q) => q.si(Dim::Energy).context("drive.e0")?,
        None => circuit.josephson_energy(),
    };
    let mut drive = DriveSpec { e0, tones: Vec::new() };
    for (m, t) in raw.drive.tones.iter().enumerate() {
        let omega = match (&t.omega, &t.lock) {
            (Some(q), None) => q.si(Dim::AngularFrequency).with_context(|| format!("drive.tones[{m}].omega"))?,
            (None, Some(lock)) => {
                let w = match lock.kind {
                    LockKind::Raman => raman_drive(lock.left, lock.right, &circuit),
                    LockKind::Squeeze => squeeze_drive(lock.left, lock.right, &circuit),
                };
                w.with_context(|| format!("drive.tones[{m}].lock"))?.abs()
            }
            _ => bail!("drive.tones[{m}] needs exactly one of omega or lock"),
        };
        drive.tones.push(Tone { eps: t.eps, kappa: t.kappa, omega });
    }

    Ok(RunConfig {
        matching: raw.matching.map(resolve_match).transpose().context("[match]")?,
        classify: raw.classify.map(|s| resolve_classify(s, &circuit)).transpose().context("[classify]")?,
        evolve: raw.evolve.map(|s| resolve_evolve(s, &circuit)).transpose().context("[evolve]")?,
        g2: raw.g2.map(resolve_g2).transpose().context("[g2]")?,
        hom: raw.hom.map(resolve_hom).transpose().context("[hom]")?,
        power: raw.power.map(resolve_power).transpose().context("[power]")?,
        degenerate_j: c.degenerate_j,
        circuit,
        drive,
    })
}

fn resolve_match(raw: RawMatch) -> Result<MatchConfig> {
    let bracket = match raw.bracket {
        Some([lo, hi]) => (lo.si(Dim::Capacitance)?, hi.si(Dim::Capacitance)?),
        None => DEFAULT_CR_BRACKET,
    };
    Ok(MatchConfig { j: raw.j, bracket })
}

fn resolve_tolerance(raw: Option<RawTolerance>) -> Result<Tolerance> {
    let tol = match raw {
        None => Some(ResonanceTolerance::default()),
        Some(RawTolerance::Relative(r)) => (r != 0.0).then_some(ResonanceTolerance::Relative(r)),
        Some(RawTolerance::Absolute(q)) => {
            let a = q.si(Dim::AngularFrequency)?;
            (a != 0.0).then_some(ResonanceTolerance::Absolute(a))
        }
    };
    if let Some(ResonanceTolerance::Relative(v) | ResonanceTolerance::Absolute(v)) = tol {
        if !(v > 0.0) {
            bail!("tolerance must be ≥ 0, got {v}");
        }
    }
    Ok(Tolerance(tol))
}

fn resolve_classify(raw: RawClassify, circuit: &CircuitParams) -> Result<ClassifyConfig> {
    let modes = match raw.modes {
        RawModeSet::Keyword(k) if k == "all" => {
            let js = circuit.mode_numbers();
            js.iter().map(|&j| ModeIndex::left(j)).chain(js.iter().map(|&j| ModeIndex::right(j))).collect()
        }
        RawModeSet::Keyword(k) => bail!("modes must be a list or \"all\", got {k:?}"),
        RawModeSet::List(list) => list.iter().map(|m| parse_mode(m)).collect::<Result<_>>()?,
    };
    Ok(ClassifyConfig { modes, tolerance: resolve_tolerance(raw.tolerance)? })
}

fn resolve_times(raw: RawTimes) -> Result<TimeAxis> {
    let end = match (raw.t_max, raw.xi_t_max) {
        (Some(q), None) => TimeEnd::Seconds(q.si(Dim::Time).context("times.t_max")?),
        (None, Some(x)) => TimeEnd::XiUnits(x),
        _ => bail!("times needs exactly one of t_max or xi_t_max"),
    };
    let (TimeEnd::Seconds(x) | TimeEnd::XiUnits(x)) = end;
    if !(x >= 0.0) {
        bail!("time axis end must be ≥ 0, got {x}");
    }
    if raw.points == 0 {
        bail!("times.points must be ≥ 1");
    }
    Ok(TimeAxis { end, points: raw.points })
}

fn resolve_evolve(raw: RawEvolve, circuit: &CircuitParams) -> Result<EvolveConfig> {
    let left = parse_mode(&raw.left)?;
    let right = parse_mode(&raw.right)?;
    let occupations = match (raw.occupations, raw.temperatures) {
        (Some(n), None) => n,
        (None, Some([tl, tr])) => {
            let freq = |m: ModeIndex| circuit.frequency(m, FrequencyChoice::Corrected);
            [
                thermal_occupation(tl.si(Dim::Temperature)?, freq(left)?)?,
                thermal_occupation(tr.si(Dim::Temperature)?, freq(right)?)?,
            ]
        }
        (None, None) => [0.0, 0.0],
        (Some(_), Some(_)) => bail!("give occupations or temperatures, not both"),
    };
    if occupations.iter().any(|n| !(*n >= 0.0)) {
        bail!("occupations must be ≥ 0, got {occupations:?}");
    }
    Ok(EvolveConfig {
        left,
        right,
        picture: raw.picture,
        resonance: raw.resonance,
        tolerance: resolve_tolerance(raw.tolerance)?,
        occupations,
        times: resolve_times(raw.times)?,
    })
}

fn resolve_g2(raw: RawG2) -> Result<G2Config> {
    let initial = match raw.initial {
        RawInitial::Keyword(k) if k == "vacuum" => InitialState::Vacuum,
        RawInitial::Keyword(k) => bail!("initial must be \"vacuum\" or a table, got {k:?}"),
        RawInitial::Table(RawInitialTable { fock: Some([s_l, s_r]), thermal: None }) => {
            InitialState::FockPair { s_l, s_r }
        }
        RawInitial::Table(RawInitialTable { fock: None, thermal: Some(n) }) => {
            InitialState::Gaussian(GaussianState::thermal(&n)?)
        }
        RawInitial::Table(_) => bail!("initial table needs exactly one of fock or thermal"),
    };
    let pair = match (raw.left, raw.right) {
        (Some(l), Some(r)) => Some((parse_mode(&l)?, parse_mode(&r)?)),
        (None, None) => None,
        _ => bail!("give both left and right, or neither"),
    };
    let xi = raw.xi.map(|q| q.si(Dim::AngularFrequency)).transpose().context("xi")?;
    if xi.is_none() && pair.is_none() {
        bail!("needs xi or a (left, right) pair to derive it from");
    }
    if pair.is_none() && raw.resonance.is_none() {
        bail!("needs resonance when no (left, right) pair is given");
    }
    Ok(G2Config {
        initial,
        resonance: raw.resonance,
        xi,
        pair,
        prefactor_frequencies: raw.prefactor_frequencies,
        scan: raw.scan,
        times: resolve_times(raw.times)?,
    })
}

fn resolve_hom(raw: RawHom) -> Result<HomConfig> {
    if raw.points == 0 {
        bail!("points must be ≥ 1");
    }
    Ok(HomConfig {
        left: parse_mode(&raw.left)?,
        right: parse_mode(&raw.right)?,
        xi: raw.xi.map(|q| q.si(Dim::AngularFrequency)).transpose().context("xi")?,
        points: raw.points,
    })
}

fn resolve_power(raw: RawPower) -> Result<PowerConfig> {
    let bath = |b: &RawBath, name: &str| -> Result<BathSpec> {
        Ok(BathSpec {
            temperature: b.temperature.si(Dim::Temperature).with_context(|| format!("{name}.temperature"))?,
            attached_mode: parse_mode(&b.mode)?,
        })
    };
    if !(raw.windows > 0.0) || raw.points < 2 {
        bail!("need windows > 0 and points ≥ 2");
    }
    Ok(PowerConfig {
        hot: bath(&raw.hot, "hot")?,
        cold: bath(&raw.cold, "cold")?,
        windows: raw.windows,
        points: raw.points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [circuit]
        c_left = "0.4pF"
        l_left = "60pH"
        l_right = "60pH"
        n_cells = 200
        i_crit = "1.25uA"
    "#;

    #[test]
    fn solves_c_right_from_degenerate_j() {
        let cfg = RunConfig::parse(&format!("{BASE}degenerate_j = 50\n")).unwrap();
        assert!((cfg.circuit.c_right * 1e12 - 1.598).abs() < 5e-3);
        let w = cfg.circuit.omega_corrected(50).unwrap();
        let u = cfg.circuit.upsilon_corrected(50).unwrap();
        assert!((w - u).abs() < 1e-9 * w);
    }

    #[test]
    fn rejects_unknown_keys_and_ambiguous_c_right() {
        assert!(RunConfig::parse(&format!("{BASE}c_right = \"1pF\"\ncolour = 3\n")).is_err());
        assert!(RunConfig::parse(BASE).is_err());
        assert!(RunConfig::parse(&format!("{BASE}c_right = \"1pF\"\ndegenerate_j = 50\n")).is_err());
    }

    #[test]
    fn tones_by_frequency_or_lock() {
        let text = format!(
            "{BASE}degenerate_j = 50\n[drive]\ntones = [{{ kappa = 0.1, omega = \"5GHz\" }}, \
             {{ kappa = 0.1, lock = {{ kind = \"raman\", left = 30, right = 50 }} }}]\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.drive.tones.len(), 2);
        assert!((cfg.drive.tones[0].omega - std::f64::consts::TAU * 5e9).abs() < 1e-3);
        let want = raman_drive(30, 50, &cfg.circuit).unwrap();
        assert_eq!(cfg.drive.tones[1].omega, want.abs());
        assert_eq!(cfg.drive.e0, cfg.circuit.josephson_energy());
    }

    #[test]
    fn modes_parse() {
        assert_eq!(parse_mode("L:50").unwrap(), ModeIndex::left(50));
        assert_eq!(parse_mode(" R:-40 ").unwrap(), ModeIndex::right(-40));
        assert!(parse_mode("X:3").is_err());
        assert!(parse_mode("L50").is_err());
    }

    #[test]
    fn zero_tolerance_means_exact() {
        assert_eq!(resolve_tolerance(Some(RawTolerance::Relative(0.0))).unwrap(), Tolerance(None));
        assert!(resolve_tolerance(Some(RawTolerance::Relative(-1.0))).is_err());
    }
}
