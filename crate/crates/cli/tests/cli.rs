use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const CIRCUIT: &str = r#"
[circuit]
c_left = "0.4pF"
l_left = "60pH"
l_right = "60pH"
n_cells = 200
i_crit = "1.25uA"
"#;

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Run { dir: tempfile::tempdir().unwrap() }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, cmd: &str, config: &str, extra: &[&str], env: &[(&str, &str)]) -> Output {
        let cfg = self.dir.path().join("run.toml");
        std::fs::write(&cfg, config).unwrap();
        let mut c = Command::new(env!("CARGO_BIN_EXE_ctl-sim"));
        c.arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(self.out()).args(extra);
        c.env_remove("CTL_SIM_THREADS");
        for (k, v) in env {
            c.env(k, v);
        }
        c.output().unwrap()
    }

    fn ok(&self, cmd: &str, config: &str) -> Value {
        let o = self.exec(cmd, config, &[], &[]);
        assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
        self.sidecar(cmd)
    }

    fn sidecar(&self, cmd: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.out().join(format!("{cmd}.json"))).unwrap()).unwrap()
    }

    fn csv(&self, name: &str) -> Vec<Vec<String>> {
        read_csv(&self.out().join(name))
    }
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn dispersion_table_matches_library_and_degeneracy() {
    let run = Run::new();
    let side = run.ok("dispersion", &format!("{CIRCUIT}c_right = \"6.39pF\"\n"));
    assert_eq!(side["passed"], true);
    assert_eq!(side["config"]["circuit"]["c_left"].as_f64().unwrap(), 0.4e-12);
    let rows = run.csv("dispersion.csv");
    assert_eq!(rows.len(), 100);

    let p = ctl_sim::CircuitParams::reference(6.39e-12);
    for row in &rows {
        let j: i32 = row[0].parse().unwrap();
        let want = [p.wave_vector(j).unwrap(), p.omega_bare(j).unwrap(), p.omega_corrected(j).unwrap()];
        for (got, want) in row[1..4].iter().zip(want) {
            assert!((num(got) - want).abs() <= 1e-12 * want.abs());
        }
    }
    // published C_r is rounded to 0.01 pF
    let last = &rows[99];
    let (w, u) = (num(&last[3]), num(&last[5]));
    assert!((w - u).abs() / w <= 1e-2);
}

#[test]
fn smallest_system_has_one_row() {
    let run = Run::new();
    let cfg = CIRCUIT.replace("n_cells = 200", "n_cells = 2") + "c_right = \"1pF\"\n";
    run.ok("dispersion", &cfg);
    let rows = run.csv("dispersion.csv");
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "1");
}

#[test]
fn match_reproduces_published_capacitances() {
    let run = Run::new();
    let side = run.ok("match", &format!("{CIRCUIT}c_right = \"1pF\"\n[match]\nj = [100, 30, 50, 30]\n"));
    let sols = side["report"]["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 3, "duplicates are removed");
    for (s, (j, pf)) in sols.iter().zip([(30, 0.27), (50, 1.60), (100, 6.39)]) {
        assert_eq!(s["j"], j);
        let c = s["c_right"].as_f64().unwrap() * 1e12;
        assert!(((c * 100.0).round() / 100.0 - pf).abs() <= 0.005, "j={j}: {c}");
    }
}

#[test]
fn empty_match_list_gives_empty_report() {
    let run = Run::new();
    let side = run.ok("match", &format!("{CIRCUIT}c_right = \"1pF\"\n[match]\nj = []\n"));
    assert_eq!(side["report"]["solutions"].as_array().unwrap().len(), 0);
    assert_eq!(run.csv("match.csv").len(), 0);
}

#[test]
fn failed_solve_is_reported_and_sets_exit_status() {
    let run = Run::new();
    let cfg = format!("{CIRCUIT}c_right = \"1pF\"\n[match]\nj = [50, 30]\nbracket = [\"1pF\", \"2pF\"]\n");
    let o = run.exec("match", &cfg, &[], &[]);
    assert_eq!(o.status.code(), Some(1));
    let side = run.sidecar("match");
    assert_eq!(side["passed"], false);
    let sols = side["report"]["solutions"].as_array().unwrap();
    // j = 30 has no root in [1, 2] pF but j = 50 is still solved
    assert!(sols[0]["error"].is_string());
    assert!(sols[1]["c_right"].as_f64().is_some());
}

#[test]
fn config_errors_exit_with_two() {
    let run = Run::new();
    let o = run.exec("dispersion", &format!("{CIRCUIT}c_right = \"1pF\"\nbogus = 1\n"), &[], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = run.exec("dispersion", &format!("{CIRCUIT}c_right = \"5GHz\"\n"), &[], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = run.exec("hom", &format!("{CIRCUIT}c_right = \"1pF\"\n"), &[], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[hom]"));
}

#[test]
fn hom_dip_report() {
    let run = Run::new();
    let side = run.ok("hom", &format!("{CIRCUIT}degenerate_j = 50\n[hom]\nleft = \"L:50\"\nright = \"R:50\"\npoints = 41\n"));
    let r = &side["report"];
    let xi = r["xi"].as_f64().unwrap();
    let t_dip = r["t_dip"].as_f64().unwrap();
    assert!((t_dip - PI / (4.0 * xi.abs())).abs() <= 1e-15 * t_dip);
    assert!(r["g2_at_dip"].as_f64().unwrap().abs() <= 1e-10);
    assert!((r["p20_at_dip"].as_f64().unwrap() - 0.5).abs() <= 1e-8);
}

#[test]
fn squeezed_vacuum_scan_approaches_two() {
    let run = Run::new();
    let cfg = format!(
        "{CIRCUIT}degenerate_j = 50\n[drive]\ntones = [{{ kappa = 0.1, lock = {{ kind = \"squeeze\", left = 50, right = -50 }} }}]\n\
         [g2]\ninitial = \"vacuum\"\nleft = \"L:50\"\nright = \"R:-50\"\ntimes = {{ xi_t_max = 10.0, points = 51 }}\n"
    );
    let side = run.ok("g2", &cfg);
    assert_eq!(side["report"]["resonance"], "two-mode-squeeze");
    let rows = run.csv("g2.csv");
    assert_eq!(rows[0][3], "", "not normalizable at t = 0");
    assert!((num(&rows[50][3]) - 2.0).abs() <= 1e-3);
}

#[test]
fn g2_without_pair_uses_given_coupling() {
    let run = Run::new();
    let cfg = format!(
        "{CIRCUIT}c_right = \"1pF\"\n[g2]\ninitial = {{ fock = [1, 1] }}\nresonance = \"degenerate-hopping\"\n\
         xi = \"1rad/s\"\nscan = \"grid\"\ntimes = {{ t_max = \"1s\", points = 5 }}\n"
    );
    let side = run.ok("g2", &cfg);
    assert_eq!(side["report"]["prefactor"], 1.0);
    let rows = run.csv("g2.csv");
    assert_eq!(rows.len(), 25);
    for r in rows {
        let (t1, t2) = (num(&r[0]), num(&r[1]));
        assert!((num(&r[3]) - (t1 + t2).cos().powi(2)).abs() <= 1e-12);
    }
}

#[test]
fn free_evolution_keeps_occupations() {
    let run = Run::new();
    let cfg = format!(
        "{CIRCUIT}c_right = \"1pF\"\n[evolve]\nleft = \"L:40\"\nright = \"R:40\"\noccupations = [0.3, 1.2]\n\
         tolerance = {{ absolute = 0.0 }}\ntimes = {{ t_max = \"10ns\", points = 11 }}\n"
    );
    let side = run.ok("evolve", &cfg);
    assert!(side["report"]["resonance"].is_null());
    for r in run.csv("evolve.csv") {
        assert!((num(&r[1]) - 0.3).abs() <= 1e-12);
        assert!((num(&r[2]) - 1.2).abs() <= 1e-12);
    }
}

#[test]
fn equal_temperatures_give_no_power() {
    let run = Run::new();
    let cfg = format!(
        "{CIRCUIT}degenerate_j = 50\n[drive]\ntones = [{{ kappa = 0.1, lock = {{ kind = \"raman\", left = 30, right = 50 }} }}]\n\
         [power]\nhot = {{ temperature = \"0.5K\", mode = \"L:30\" }}\ncold = {{ temperature = \"0.5K\", mode = \"R:50\" }}\npoints = 21\n"
    );
    let side = run.ok("power", &cfg);
    let r = &side["report"];
    let scale = 1.0545718e-34 * r["drive_freq"].as_f64().unwrap() * r["xi"].as_f64().unwrap().abs();
    let n = r["initial_occupation_hot"].as_f64().unwrap();
    // the two modes differ in frequency, so equal temperatures still leave a small bias
    let bias = n - r["initial_occupation_cold"].as_f64().unwrap();
    assert!(r["mean_power"].as_f64().unwrap().abs() <= scale * (bias.abs() + 1e-9));
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let cfg = format!(
        "{CIRCUIT}degenerate_j = 50\n[drive]\ntones = [{{ kappa = 0.1, lock = {{ kind = \"raman\", left = 30, right = 50 }} }}]\n\
         [power]\nhot = {{ temperature = \"200mK\", mode = \"L:30\" }}\ncold = {{ temperature = \"20mK\", mode = \"R:50\" }}\npoints = 31\n"
    );
    let a = Run::new();
    let b = Run::new();
    assert!(a.exec("power", &cfg, &[], &[("CTL_SIM_THREADS", "1")]).status.success());
    assert!(b.exec("power", &cfg, &[], &[("CTL_SIM_THREADS", "3")]).status.success());
    for f in ["power.csv", "power.json"] {
        assert_eq!(
            std::fs::read(a.out().join(f)).unwrap(),
            std::fs::read(b.out().join(f)).unwrap(),
            "{f} differs"
        );
    }
}
