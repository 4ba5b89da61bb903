use std::path::Path;
use std::process::{Command, Output};

use dualchain::cli::{RunReport, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_SINGULAR};
use dualchain::io::{read_dual_field, read_trajectory};
use dualchain::{Mode, Scenario};
use sha2::{Digest, Sha256};

fn dualchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualchain")).args(args).output().unwrap()
}

fn preset_text(name: &str) -> &'static str {
    dualchain::scenario_presets().into_iter().find(|p| p.name == name).unwrap().text
}

fn report(dir: &Path) -> RunReport {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check_manifest(dir: &Path, report: &RunReport) {
    for f in &report.files {
        let bytes = std::fs::read(dir.join(&f.path)).unwrap();
        assert_eq!(bytes.len() as u64, f.bytes, "{}", f.path);
        assert_eq!(hex::encode(Sha256::digest(&bytes)), f.sha256, "{}", f.path);
    }
}

#[test]
fn harmonic_verify_succeeds() {
    let out = tempfile::tempdir().unwrap();
    let res = dualchain(&["verify", "--preset", "harmonic_n1", "--out", out.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&res.stderr));
    let rep = report(out.path());
    assert_eq!(rep.mode, Mode::Verify);
    assert_eq!(rep.exit_code, EXIT_OK);
    let v = rep.verification.as_ref().unwrap();
    assert!(v.oracle_max_deviation.unwrap() <= 1e-4);
    assert!(v.flags.is_empty(), "{:?}", v.flags);
    let roles: Vec<&str> = rep.files.iter().map(|f| f.role.as_str()).collect();
    assert_eq!(roles, ["dual", "oracle", "trajectory"]);
    check_manifest(out.path(), &rep);
}

#[test]
fn zero_position_scale_is_a_config_error() {
    let out = tempfile::tempdir().unwrap();
    let res = dualchain(&["dual-solve", "--preset", "harmonic_n1", "--set", "scales.c_x=0", "--out", out.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&res.stderr).contains("c_x must be positive"));
    assert!(!out.path().join("report.json").exists());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_text("harmonic_n1");
    let path = dir.path().join("typo.cfg");
    std::fs::write(&path, format!("{text}\n[solver]\nmax_iteration = 3\n")).unwrap();
    let res = dualchain(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&res.stderr).contains("max_iteration"));

    let res = dualchain(&["run", "--preset", "harmonic_n1", "--set", "chain.spring=1"]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn missing_config_and_bad_arguments() {
    assert_eq!(dualchain(&["run", "--config", "/nonexistent/x.cfg"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(dualchain(&["run"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(dualchain(&["frobnicate"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(dualchain(&["run", "--preset", "nope"]).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn fput_dual_solve_has_small_duals() {
    let out = tempfile::tempdir().unwrap();
    let res = dualchain(&["dual-solve", "--preset", "fput_alpha_n8", "--out", out.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_OK));
    let field = read_dual_field(&out.path().join("dual.csv")).unwrap();
    assert_eq!(field.grid.intervals(), 4000);
    assert!(field.amax() < 1e-6, "{}", field.amax());
    check_manifest(out.path(), &report(out.path()));
}

#[test]
fn non_convergence_exits_3_with_report() {
    let out = tempfile::tempdir().unwrap();
    let res = dualchain(&[
        "verify",
        "--preset",
        "perturbed_base_n4",
        "--set",
        "solver.max_iterations=1",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(EXIT_NOT_CONVERGED));
    let rep = report(out.path());
    assert_eq!(rep.exit_code, EXIT_NOT_CONVERGED);
    assert!(!rep.convergence.as_ref().unwrap().converged);
    assert!(rep.error.as_ref().unwrap().contains("no convergence"));
    check_manifest(out.path(), &rep);
}

#[test]
fn resonance_exits_4() {
    let out = tempfile::tempdir().unwrap();
    let res = dualchain(&[
        "periodic",
        "--preset",
        "harmonic_n1",
        "--set",
        "base={kind=\"zero\"}",
        "--set",
        "forcing=[{index=0, sinusoids=[{amplitude=1.0, omega=1.0}]}]",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(EXIT_SINGULAR), "{}", String::from_utf8_lossy(&res.stderr));
    let rep = report(out.path());
    assert!(rep.error.unwrap().contains("resonance"));
}

#[test]
fn simulate_trajectory_round_trips() {
    let out = tempfile::tempdir().unwrap();
    let res = dualchain(&["simulate", "--preset", "perturbed_base_n4", "--out", out.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_OK));
    let file = read_trajectory(&out.path().join("trajectory.csv")).unwrap();
    let direct = Scenario::from_preset("perturbed_base_n4", &[]).unwrap().primal_solve().unwrap();
    assert_eq!(file, direct);
    let header = std::fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,x_1,x_2,x_3,x_4,v_1,v_2,v_3,v_4\n"));
}

#[test]
fn periodic_preset_writes_closed_orbit() {
    let out = tempfile::tempdir().unwrap();
    let res = dualchain(&["run", "--preset", "periodic_forced_n4", "--out", out.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(EXIT_OK));
    let orbit = read_trajectory(&out.path().join("orbit.csv")).unwrap();
    let m = orbit.grid.intervals();
    assert_eq!(orbit.x[m], orbit.x[0]);
    assert_eq!(report(out.path()).mode, Mode::Periodic);
}

#[test]
fn jobs_give_isolated_identical_outputs() {
    let serial = tempfile::tempdir().unwrap();
    let parallel = tempfile::tempdir().unwrap();
    let args = |dir: &Path, jobs: &'static str| {
        dualchain(&[
            "run",
            "--preset",
            "damped_n1",
            "--preset",
            "forced_damped_n1",
            "--preset",
            "damped_n1",
            "--jobs",
            jobs,
            "--out",
            dir.to_str().unwrap(),
        ])
    };
    assert_eq!(args(serial.path(), "1").status.code(), Some(EXIT_OK));
    assert_eq!(args(parallel.path(), "3").status.code(), Some(EXIT_OK));
    for name in ["damped_n1", "forced_damped_n1", "damped_n1_2"] {
        for file in ["dual.csv", "trajectory.csv", "oracle.csv"] {
            let a = std::fs::read(serial.path().join(name).join(file)).unwrap();
            let b = std::fs::read(parallel.path().join(name).join(file)).unwrap();
            assert_eq!(a, b, "{name}/{file}");
        }
        let (ra, rb) = (report(&serial.path().join(name)), report(&parallel.path().join(name)));
        assert_eq!(ra.config_hash, rb.config_hash);
    }
}

#[test]
fn presets_are_listed() {
    let res = dualchain(&["presets"]);
    assert_eq!(res.status.code(), Some(EXIT_OK));
    let names: Vec<String> = String::from_utf8(res.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(
        names,
        ["harmonic_n1", "damped_n1", "forced_damped_n1", "fput_alpha_n8", "periodic_forced_n4", "perturbed_base_n4"]
    );
    let shown = dualchain(&["presets", "damped_n1"]);
    assert!(String::from_utf8(shown.stdout).unwrap().contains("(1 + t) exp(-t)"));
}

mod hash {
    use super::*;

    fn hash(preset: &str, sets: &[&str], mode: Mode) -> String {
        let sets: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        Scenario::from_preset(preset, &sets).unwrap().config_hash(mode)
    }

    #[test]
    fn stable_for_equivalent_configs() {
        let h = hash("damped_n1", &[], Mode::Verify);
        assert_eq!(h, hash("damped_n1", &[], Mode::Verify));
        assert_eq!(h, hash("damped_n1", &["output.dir=\"elsewhere\""], Mode::Verify));
        assert_eq!(h, hash("damped_n1", &["solver.max_iterations=50", "scales.c_x=1.0"], Mode::Verify));
        assert_eq!(h, hash("damped_n1", &["mode=\"simulate\""], Mode::Verify));
        assert_eq!(h, hash("damped_n1", &["seed=99"], Mode::Verify));
        assert_eq!(h, hash("damped_n1", &["chain.force.c=[-0.0]"], Mode::Verify));
    }

    #[test]
    fn force_spellings_with_equal_coefficients_agree() {
        let fput = hash("fput_alpha_n8", &["chain.force={kind=\"fput_alpha\", alpha=0.25}"], Mode::DualSolve);
        let scenario = Scenario::from_preset("fput_alpha_n8", &[]).unwrap();
        let force = &scenario.params.force;
        let n = force.n();
        let a: Vec<String> = (0..n * n).map(|i| format!("{:?}", force.a()[(i / n, i % n)])).collect();
        let mut b = Vec::new();
        for j in 0..n {
            for r in 0..n {
                for s in r..n {
                    let v = force.b(j)[(r, s)];
                    if v != 0.0 {
                        b.push(format!("[{j}, {r}, {s}, {:?}]", if r == s { v } else { 2.0 * v }));
                    }
                }
            }
        }
        let explicit = format!("chain.force={{kind=\"explicit\", a=[{}], b=[{}]}}", a.join(", "), b.join(", "));
        assert_eq!(fput, hash("fput_alpha_n8", &[&explicit], Mode::DualSolve));
    }

    #[test]
    fn changes_with_meaningful_fields() {
        let h = hash("damped_n1", &[], Mode::Verify);
        for set in [
            "chain.damping=2.5",
            "chain.mass=1.5",
            "grid.intervals=2001",
            "grid.t_final=5.5",
            "initial.x=[0.9]",
            "scales.c_v=2.0",
            "scales.freeze_a=true",
            "solver.tolerance=1e-9",
            "solver.step_control=\"trust-region\"",
            "primal.refine=5",
            "base={kind=\"constant\", x=[0.0], v=[0.0]}",
            "forcing=[{index=0, constant=0.1}]",
        ] {
            assert_ne!(h, hash("damped_n1", &[set], Mode::Verify), "{set}");
        }
        assert_ne!(h, hash("damped_n1", &[], Mode::DualSolve));
    }

    #[test]
    fn irrelevant_sections_do_not_change_simulate_hash() {
        let h = hash("damped_n1", &[], Mode::Simulate);
        assert_eq!(h, hash("damped_n1", &["scales.c_x=3.0", "solver.max_iterations=7"], Mode::Simulate));
        assert_ne!(h, hash("damped_n1", &["primal.method=\"implicit-midpoint\""], Mode::Simulate));
    }

    #[test]
    fn seed_matters_only_for_noise() {
        let h = hash("perturbed_base_n4", &[], Mode::Verify);
        assert_ne!(h, hash("perturbed_base_n4", &["seed=8"], Mode::Verify));
    }
}

#[test]
fn table_base_from_emitted_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let simulate = |extra: &str| {
        let res = dualchain(&[
            "simulate",
            "--preset",
            "forced_damped_n1",
            "--set",
            "grid.intervals=200",
            "--set",
            extra,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(res.status.code(), Some(EXIT_OK));
    };
    simulate("initial.v=[1.0]");
    let cfg = dir.path().join("tabled.cfg");
    let text = preset_text("forced_damped_n1").replace("kind = \"zero\"", "kind = \"table\"\npath = \"trajectory.csv\"");
    std::fs::write(&cfg, text).unwrap();
    let sets = ["grid.intervals=200".to_string()];
    let scenario = Scenario::load(&cfg, &sets).unwrap();
    let sol = dualchain::solve_dual(&scenario.problem().unwrap(), &Default::default()).unwrap();
    assert!(sol.converged && sol.field.amax() < 1e-2, "{}", sol.field.amax());
    let h = scenario.config_hash(Mode::DualSolve);
    assert_eq!(h, Scenario::load(&cfg, &sets).unwrap().config_hash(Mode::DualSolve));
    simulate("initial.v=[1.1]");
    assert_ne!(h, Scenario::load(&cfg, &sets).unwrap().config_hash(Mode::DualSolve));
    let wrong_grid = ["grid.intervals=100".to_string()];
    assert!(Scenario::load(&cfg, &wrong_grid).is_err());
}
