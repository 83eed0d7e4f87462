//! Subcommand bodies. Each returns its output tables, a JSON report and the
//! runtime invariant checks; writing files is left to the caller.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use anyhow::{anyhow, bail, ensure, Context as _, Result};
use ctl_sim::circuit::{Line, ModeIndex, HBAR};
use ctl_sim::correlations::{
    g2_fock_oracle, g2_generic, g2_grid, g2_hopping_raman_fock, hom_dip, CorrelationRequest,
    CorrelationScale, InitialState, StateRef,
};
use ctl_sim::dynamics::{
    evolve_raman, evolve_squeeze, fock_propagate, propagate_static, symplectic_defect, symplectic_propagate,
    BogoliubovTransform, FockState, GaussianState, DEFAULT_HOPPING_CUTOFF,
};
use ctl_sim::hamiltonian::{driven_schedule, rwa_effective_hamiltonian};
use ctl_sim::matching::{classify_resonances_with, solve_cr_for_degeneracy};
use ctl_sim::thermo::{simulate_amplifier_with, transfer_window, uniform_grid};
use ctl_sim::{Exec, QuadraticHamiltonian, ResonanceKind, ResonanceSpec, ResonanceTolerance};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Picture, RunConfig, Scan, Tolerance};
use crate::report::{render_csv, Cell, Checks};

/// Random (t1, t2) points used to cross-check closed-form g2 scans.
const G2_CROSS_CHECKS: usize = 20;
/// Tolerance for closed form vs independent evaluation, in quanta².
const CROSS_CHECK_TOL: f64 = 1e-8;

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub seed: u64,
    pub tol: f64,
    pub exec: Exec,
}

pub struct Outcome {
    /// (file name, contents)
    pub files: Vec<(String, String)>,
    pub report: Value,
    pub checks: Checks,
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref().ok_or_else(|| anyhow!("config has no [{name}] section"))
}

fn kind_name(kind: ResonanceKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn require_pair(l: ModeIndex, r: ModeIndex) -> Result<()> {
    ensure!(
        l.line == Line::Left && r.line == Line::Right,
        "left must be an L mode and right an R mode, got {l} and {r}"
    );
    Ok(())
}

/// Resonances of exactly the pair (l, r); `Tolerance(None)` keeps exact matches only.
fn pair_resonances(
    ctx: &Context,
    l: ModeIndex,
    r: ModeIndex,
    tol: Tolerance,
) -> Result<Vec<ResonanceSpec>> {
    let cfg = ctx.config;
    let found = match tol.0 {
        Some(t) => classify_resonances_with(ctx.exec, &cfg.drive, &cfg.circuit, &[l, r], t)?,
        None => classify_resonances_with(
            ctx.exec,
            &cfg.drive,
            &cfg.circuit,
            &[l, r],
            ResonanceTolerance::Absolute(f64::MIN_POSITIVE),
        )?
        .into_iter()
        .filter(|s| s.detuning == 0.0)
        .collect(),
    };
    Ok(found.into_iter().filter(|s| s.mode_left == Some(l) && s.mode_right == Some(r)).collect())
}

fn choose(specs: &[ResonanceSpec], wanted: Option<ResonanceKind>) -> Result<Option<ResonanceSpec>> {
    let names = || specs.iter().map(|s| kind_name(s.kind)).collect::<Vec<_>>().join(", ");
    match wanted {
        Some(k) => specs
            .iter()
            .find(|s| s.kind == k)
            .copied()
            .map(Some)
            .ok_or_else(|| anyhow!("resonance {} not present; found [{}]", kind_name(k), names())),
        None => match specs {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            _ => bail!("several resonances found [{}]; choose one with `resonance`", names()),
        },
    }
}

/// Effective coupling [rad/s] of a two-mode RWA Hamiltonian.
fn coupling(h: &QuadraticHamiltonian, kind: ResonanceKind) -> f64 {
    match kind {
        ResonanceKind::TwoModeSqueeze => h.pairing[(0, 1)].re / HBAR,
        _ => h.hopping[(0, 1)].re / HBAR,
    }
}

pub fn dispersion(ctx: &Context) -> Result<Outcome> {
    let p = &ctx.config.circuit;
    let js: Vec<i32> = (1..=p.half_cells()).collect();
    let rows = ctx.exec.try_map(&js, |&j| -> ctl_sim::Result<[f64; 7]> {
        Ok([
            f64::from(j),
            p.wave_vector(j)?,
            p.omega_bare(j)?,
            p.omega_corrected(j)?,
            p.upsilon_bare(j)?,
            p.upsilon_corrected(j)?,
            p.epsilon_corrected(j)? / HBAR,
        ])
    })?;
    let header = [
        "j",
        "k_j",
        "omega_bare",
        "omega_corrected",
        "upsilon_bare",
        "upsilon_corrected",
        "epsilon_corrected_over_hbar",
    ];
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| std::iter::once(Cell::Int(r[0] as i64)).chain(r[1..].iter().map(|&x| Cell::Num(x))).collect())
        .collect();
    let csv = render_csv(&header, &cells);

    let mut checks = Checks::default();
    let mut worst = 0.0_f64;
    for (line, row) in csv.lines().skip(1).zip(&rows) {
        for (text, &want) in line.split(',').zip(row.iter()) {
            let got: f64 = text.parse().context("re-reading dispersion table")?;
            worst = worst.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        }
    }
    checks.at_most("csv_round_trip_relative_error", worst, 1e-12);
    let count = |f: &dyn Fn(&[f64; 7], &[f64; 7]) -> bool| {
        rows.windows(2).filter(|w| f(&w[0], &w[1])).count() as f64
    };
    checks.at_most("omega_bare_not_decreasing", count(&|a, b| b[2] >= a[2]), 0.0);
    checks.at_most("upsilon_bare_not_increasing", count(&|a, b| b[4] <= a[4]), 0.0);
    checks.at_most("epsilon_not_increasing", count(&|a, b| b[6] <= a[6]), 0.0);
    let below = rows.iter().filter(|r| r[3] < r[2] || r[5] < r[4]).count() as f64;
    checks.at_most("corrected_below_bare", below, 0.0);

    let report = json!({ "rows": rows.len() });
    Ok(Outcome { files: vec![("dispersion.csv".into(), csv)], report, checks })
}

#[derive(Serialize)]
struct MatchEntry {
    j: i32,
    c_right: Option<f64>,
    residual: Option<f64>,
    iterations: Option<u32>,
    error: Option<String>,
}

pub fn matching(ctx: &Context) -> Result<Outcome> {
    let m = section(&ctx.config.matching, "match")?;
    let js: Vec<i32> = m.j.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let p = &ctx.config.circuit;
    let entries: Vec<MatchEntry> = ctx.exec.map(&js, |&j| match solve_cr_for_degeneracy(j, p, m.bracket) {
        Ok(s) => MatchEntry {
            j,
            c_right: Some(s.c_right),
            residual: Some(s.residual),
            iterations: Some(s.iterations),
            error: None,
        },
        Err(e) => MatchEntry { j, c_right: None, residual: None, iterations: None, error: Some(e.to_string()) },
    });

    let mut checks = Checks::default();
    let failed = entries.iter().filter(|e| e.error.is_some()).count();
    checks.at_most("failed_solves", failed as f64, 0.0);
    let worst = entries.iter().filter_map(|e| e.residual).fold(0.0, f64::max);
    checks.at_most("max_relative_residual", worst, 1e-9);

    let cells: Vec<Vec<Cell>> = entries
        .iter()
        .map(|e| {
            vec![
                Cell::from(e.j),
                e.c_right.into(),
                e.residual.into(),
                e.iterations.map_or(Cell::Empty, |n| Cell::Int(n.into())),
                e.error.clone().map_or(Cell::Empty, |s| Cell::Text(format!("\"{}\"", s.replace('"', "'")))),
            ]
        })
        .collect();
    let csv = render_csv(&["j", "c_right", "residual", "iterations", "error"], &cells);
    let report = json!({ "solutions": entries });
    Ok(Outcome { files: vec![("match.csv".into(), csv)], report, checks })
}

pub fn classify(ctx: &Context) -> Result<Outcome> {
    let c = section(&ctx.config.classify, "classify")?;
    let cfg = ctx.config;
    let specs: Vec<ResonanceSpec> = match c.tolerance.0 {
        Some(t) => classify_resonances_with(ctx.exec, &cfg.drive, &cfg.circuit, &c.modes, t)?,
        None => classify_resonances_with(
            ctx.exec,
            &cfg.drive,
            &cfg.circuit,
            &c.modes,
            ResonanceTolerance::Absolute(f64::MIN_POSITIVE),
        )?
        .into_iter()
        .filter(|s| s.detuning == 0.0)
        .collect(),
    };
    let mut checks = Checks::default();
    let worst = specs.iter().map(|s| s.detuning.abs() / s.tolerance).fold(0.0, f64::max);
    checks.at_most("max_detuning_over_tolerance", worst, 1.0);

    let mode = |m: Option<ModeIndex>| m.map_or(Cell::Empty, |m| Cell::Text(m.to_string()));
    let tone = |t: Option<usize>| t.map_or(Cell::Empty, |t| Cell::Int(t as i64));
    let cells: Vec<Vec<Cell>> = specs
        .iter()
        .map(|s| {
            vec![
                Cell::Text(kind_name(s.kind)),
                mode(s.mode_left),
                mode(s.mode_right),
                tone(s.drive_tone_index),
                tone(s.second_tone_index),
                Cell::Num(s.detuning),
                Cell::Num(s.tolerance),
                Cell::Text(s.momentum_matched.to_string()),
            ]
        })
        .collect();
    let header =
        ["kind", "mode_left", "mode_right", "tone", "second_tone", "detuning", "tolerance", "momentum_matched"];
    let csv = render_csv(&header, &cells);
    let report = json!({ "count": specs.len(), "resonances": specs });
    Ok(Outcome { files: vec![("classify.csv".into(), csv)], report, checks })
}

pub fn evolve(ctx: &Context) -> Result<Outcome> {
    let e = section(&ctx.config.evolve, "evolve")?;
    let cfg = ctx.config;
    require_pair(e.left, e.right)?;
    let specs = pair_resonances(ctx, e.left, e.right, e.tolerance)?;
    let chosen = choose(&specs, e.resonance)?;
    let h = match &chosen {
        Some(s) => rwa_effective_hamiltonian(s, &cfg.drive, &cfg.circuit)?,
        None => QuadraticHamiltonian::zeros(&[e.left, e.right]),
    };
    let xi = h.hopping.iter().chain(h.pairing.iter()).map(|z| z.norm()).fold(0.0, f64::max) / HBAR;
    let t_end = e.times.end.seconds(xi)?;
    let grid = uniform_grid(t_end, e.times.points);
    let initial = GaussianState::thermal(&e.occupations)?;

    let propagators: Vec<DMatrix<f64>> = match e.picture {
        Picture::Rwa => ctx.exec.try_map(&grid, |&t| propagate_static(&h, t, ctx.tol))?,
        Picture::Lab => {
            let schedule = driven_schedule(&cfg.circuit, &[e.left, e.right], &cfg.drive)?;
            let mut s = DMatrix::identity(4, 4);
            let mut prev = 0.0;
            let mut out = Vec::with_capacity(grid.len());
            for &t in &grid {
                s = symplectic_propagate(&schedule, &cfg.drive, prev, t, ctx.tol)? * s;
                prev = t;
                out.push(s.clone());
            }
            out
        }
    };

    let mut cells = Vec::with_capacity(grid.len());
    let (mut defect_ratio, mut violation, mut drift) = (0.0_f64, 0.0_f64, 0.0_f64);
    let conserved = |n: (f64, f64)| match chosen.map(|s| s.kind) {
        None | Some(ResonanceKind::DegenerateHopping | ResonanceKind::RamanLtoR | ResonanceKind::RamanRtoL) => {
            Some(n.0 + n.1)
        }
        Some(ResonanceKind::TwoModeSqueeze) => Some(n.0 - n.1),
        _ => None,
    };
    let n0 = (initial.occupation(0), initial.occupation(1));
    for (&t, s) in grid.iter().zip(&propagators) {
        let state = initial.evolve(s)?;
        let n = (state.occupation(0), state.occupation(1));
        let defect = symplectic_defect(s);
        defect_ratio = defect_ratio.max(defect / (10.0 * ctx.tol * s.amax().max(1.0).powi(2)));
        violation = violation.max(state.uncertainty_violation() / (1.0 + n.0 + n.1));
        if e.picture == Picture::Rwa {
            if let (Some(a), Some(b)) = (conserved(n), conserved(n0)) {
                drift = drift.max((a - b).abs() / (1.0 + n.0 + n.1));
            }
        }
        cells.push(vec![Cell::Num(t), Cell::Num(n.0), Cell::Num(n.1), Cell::Num(defect)]);
    }
    let mut checks = Checks::default();
    checks.at_most("symplectic_defect_over_limit", defect_ratio, 1.0);
    checks.at_most("uncertainty_violation", violation, 1e-9);
    checks.at_most("conserved_number_drift", drift, 1e-8);

    let csv = render_csv(&["t", "n_left", "n_right", "symplectic_defect"], &cells);
    let report = json!({
        "resonance": chosen,
        "xi": xi,
        "t_end": t_end,
        "initial_occupations": e.occupations,
    });
    Ok(Outcome { files: vec![("evolve.csv".into(), csv)], report, checks })
}

/// Heisenberg transform of the reduced two-mode model at `t`.
fn pair_transform(kind: ResonanceKind, xi: f64, t: f64) -> BogoliubovTransform {
    match kind {
        ResonanceKind::TwoModeSqueeze => evolve_squeeze(xi, 0.0, 0.0, t),
        _ => evolve_raman(xi, 0.0, 0.0, t),
    }
}

/// Independent G² route at (t1, t2), in quanta.
type Reference = Box<dyn Fn(f64, f64) -> ctl_sim::Result<f64>>;

pub fn g2(ctx: &Context) -> Result<Outcome> {
    let g = section(&ctx.config.g2, "g2")?;
    let cfg = ctx.config;
    let (kind, xi, scale) = match g.pair {
        Some((l, r)) => {
            require_pair(l, r)?;
            let specs = pair_resonances(ctx, l, r, Tolerance(Some(ResonanceTolerance::default())))?;
            let spec = choose(&specs, g.resonance)?.ok_or_else(|| anyhow!("no resonance between {l} and {r}"))?;
            let xi = match g.xi {
                Some(x) => x,
                None => coupling(&rwa_effective_hamiltonian(&spec, &cfg.drive, &cfg.circuit)?, spec.kind),
            };
            (spec.kind, xi, CorrelationScale::for_pair(&cfg.circuit, (l, r), g.prefactor_frequencies)?)
        }
        None => {
            let kind = g.resonance.ok_or_else(|| anyhow!("resonance is required without a pair"))?;
            let xi = g.xi.ok_or_else(|| anyhow!("xi is required without a pair"))?;
            (kind, xi, CorrelationScale::unit())
        }
    };
    let t_end = g.times.end.seconds(xi)?;
    let ts = uniform_grid(t_end, g.times.points);
    let points: Vec<(f64, f64)> = match g.scan {
        Scan::Diagonal => ts.iter().map(|&t| (t, t)).collect(),
        Scan::Grid => ts.iter().flat_map(|&a| ts.iter().map(move |&b| (a, b))).collect(),
    };
    let request = CorrelationRequest { initial: g.initial.clone(), resonance: kind, xi, t1: 0.0, t2: 0.0 };
    let results = g2_grid(ctx.exec, &request, &points, &scale)?;

    let mut checks = Checks::default();
    let pre = scale.prefactor;
    let negative = results.iter().map(|r| -r.g2_unnormalized / pre).fold(0.0, f64::max);
    checks.at_most("negative_g2", negative, 1e-12);
    let non_finite = results
        .iter()
        .filter(|r| !r.g2_unnormalized.is_finite() || r.g2_normalized.is_some_and(|x| !x.is_finite()))
        .count();
    checks.at_most("non_finite_values", non_finite as f64, 0.0);

    // independent route: Heisenberg transforms applied to the input state
    let reference: Option<Reference> = match &g.initial {
        InitialState::Vacuum => {
            let vac = GaussianState::vacuum(2);
            Some(Box::new(move |t1, t2| {
                let tr = |t| pair_transform(kind, xi, t);
                Ok(g2_generic(StateRef::Gaussian(&vac), &tr(t1), &tr(t2), 0, 1, &scale)?.g2_unnormalized)
            }))
        }
        InitialState::FockPair { s_l, s_r } => {
            let occ = [*s_l as usize, *s_r as usize];
            let psi = FockState::basis(&occ, &occ)?;
            Some(Box::new(move |t1, t2| {
                let tr = |t| pair_transform(kind, xi, t);
                Ok(g2_generic(StateRef::Fock(&psi), &tr(t1), &tr(t2), 0, 1, &scale)?.g2_unnormalized)
            }))
        }
        InitialState::Gaussian(_) => None,
    };
    let mut cross_checked = 0;
    if let Some(reference) = reference {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut worst = 0.0_f64;
        for _ in 0..G2_CROSS_CHECKS {
            let (t1, t2) = (rng.random_range(0.0..=t_end), rng.random_range(0.0..=t_end));
            let closed = CorrelationRequest { t1, t2, ..request.clone() }.evaluate(&scale)?.g2_unnormalized / pre;
            let other = reference(t1, t2)? / pre;
            worst = worst.max((closed - other).abs() / closed.abs().max(1.0));
        }
        checks.at_most("closed_form_vs_transform_route", worst, CROSS_CHECK_TOL);
        cross_checked = G2_CROSS_CHECKS;
    }

    let cells: Vec<Vec<Cell>> = points
        .iter()
        .zip(&results)
        .map(|(&(t1, t2), r)| {
            vec![
                Cell::Num(t1),
                Cell::Num(t2),
                Cell::Num(r.g2_unnormalized),
                r.g2_normalized.into(),
                Cell::Num(r.g1_left),
                Cell::Num(r.g1_right),
            ]
        })
        .collect();
    let csv = render_csv(&["t1", "t2", "g2_unnormalized", "g2_normalized", "g1_left", "g1_right"], &cells);
    let report = json!({
        "resonance": kind_name(kind),
        "xi": xi,
        "t_end": t_end,
        "prefactor": pre,
        "final_g2_normalized": results.last().and_then(|r| r.g2_normalized),
        "cross_checked_points": cross_checked,
    });
    Ok(Outcome { files: vec![("g2.csv".into(), csv)], report, checks })
}

pub fn hom(ctx: &Context) -> Result<Outcome> {
    let c = section(&ctx.config.hom, "hom")?;
    let cfg = ctx.config;
    require_pair(c.left, c.right)?;
    let xi = match c.xi {
        Some(x) => x,
        None => {
            let specs = pair_resonances(ctx, c.left, c.right, Tolerance(Some(ResonanceTolerance::default())))?;
            let spec = choose(&specs, Some(ResonanceKind::DegenerateHopping))?
                .expect("choose returns Some for an explicit kind");
            coupling(&rwa_effective_hamiltonian(&spec, &cfg.drive, &cfg.circuit)?, spec.kind)
        }
    };
    let t_dip = hom_dip(xi)?;
    let mut h = QuadraticHamiltonian::zeros(&[c.left, c.right]);
    h.set_hopping(0, 1, num_complex::Complex64::new(HBAR * xi, 0.0));
    let psi = FockState::basis(&[DEFAULT_HOPPING_CUTOFF; 2], &[1, 1])?;
    let unit = CorrelationScale::unit();

    let grid = uniform_grid(PI / xi.abs(), c.points);
    let rows = ctx.exec.try_map(&grid, |&t| -> ctl_sim::Result<[f64; 4]> {
        let closed = g2_hopping_raman_fock(1, 1, xi, t, t, &unit)?.normalized()?;
        let oracle = g2_fock_oracle(&h, &psi, 0, 1, t, t, &unit)?.normalized()?;
        let p11 = fock_propagate(&h, &psi, t)?.probability(&[1, 1]);
        Ok([t, closed, oracle, p11])
    })?;
    let at_dip = fock_propagate(&h, &psi, t_dip)?;
    let g2_dip = g2_hopping_raman_fock(1, 1, xi, t_dip, t_dip, &unit)?.normalized()?;
    let (p11, p20, p02) = (at_dip.probability(&[1, 1]), at_dip.probability(&[2, 0]), at_dip.probability(&[0, 2]));

    let mut checks = Checks::default();
    checks.at_most("g2_at_dip", g2_dip.abs(), 1e-10);
    checks.at_most("p11_at_dip", p11, 1e-10);
    checks.at_most("p20_minus_half", (p20 - 0.5).abs(), 1e-8);
    checks.at_most("p02_minus_half", (p02 - 0.5).abs(), 1e-8);
    let worst = rows.iter().map(|r| (r[1] - r[2]).abs().max((r[1] - r[3]).abs())).fold(0.0, f64::max);
    checks.at_most("closed_form_vs_fock_oracle", worst, 1e-8);

    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| vec![Cell::Num(r[0]), Cell::Num(xi.abs() * r[0]), Cell::Num(r[1]), Cell::Num(r[2]), Cell::Num(r[3])])
        .collect();
    let csv = render_csv(&["t", "xi_t", "g2_closed", "g2_oracle", "p11_oracle"], &cells);
    let report = json!({
        "xi": xi,
        "t_dip": t_dip,
        "g2_at_dip": g2_dip,
        "p11_at_dip": p11,
        "p20_at_dip": p20,
        "p02_at_dip": p02,
    });
    Ok(Outcome { files: vec![("hom.csv".into(), csv)], report, checks })
}

pub fn power(ctx: &Context) -> Result<Outcome> {
    let c = section(&ctx.config.power, "power")?;
    let cfg = ctx.config;
    let run = |grid: &[f64]| simulate_amplifier_with(ctx.exec, &c.hot, &c.cold, &cfg.drive, &cfg.circuit, grid);
    let probe = run(&[0.0])?;
    let window = transfer_window(probe.xi)?;
    let trace = run(&uniform_grid(c.windows * window, c.points))?;

    let total0 = trace.occupation_hot[0] + trace.occupation_cold[0];
    let drift = trace
        .occupation_hot
        .iter()
        .zip(&trace.occupation_cold)
        .map(|(a, b)| (a + b - total0).abs())
        .fold(0.0, f64::max);
    let mut checks = Checks::default();
    checks.at_most("total_occupation_drift", drift / (1.0 + total0), 1e-8);
    let non_finite = trace.power.iter().filter(|p| !p.is_finite()).count();
    checks.at_most("non_finite_power", non_finite as f64, 0.0);

    let cells: Vec<Vec<Cell>> = (0..trace.times.len())
        .map(|k| {
            vec![
                Cell::Num(trace.times[k]),
                Cell::Num(trace.power[k]),
                Cell::Num(trace.occupation_hot[k]),
                Cell::Num(trace.occupation_cold[k]),
            ]
        })
        .collect();
    let csv = render_csv(&["t", "power", "n_hot", "n_cold"], &cells);
    let report = json!({
        "xi": trace.xi,
        "drive_freq": trace.drive_freq,
        "transfer_window": window,
        "mean_power": trace.mean_power,
        "initial_occupation_hot": trace.occupation_hot[0],
        "initial_occupation_cold": trace.occupation_cold[0],
    });
    Ok(Outcome { files: vec![("power.csv".into(), csv)], report, checks })
}
